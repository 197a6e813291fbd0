//! Finite groupoids with a `Z/2` involution and the equivariant functors
//! between them.
//!
//! Everything here is a literal table: objects and morphisms are opaque
//! string identifiers, composition is a total map on composable pairs, and
//! equality is identifier equality. That keeps every decision procedure in
//! the rest of the crate an exhaustive enumeration with predictable cost.
//!
//! Composition order convention, used everywhere including serialized files:
//! `compose(m2, m1)` means "m2 after m1" and is defined exactly when
//! `dst(m1) = src(m2)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Identifier of an object. Opaque; equality is string equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjId(String);

/// Identifier of a morphism. Opaque; equality is string equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MorId(String);

macro_rules! id_impls {
    ($ty:ident) => {
        impl $ty {
            pub fn new(s: impl Into<String>) -> Self {
                $ty(s.into())
            }
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
        impl From<&str> for $ty {
            fn from(s: &str) -> Self {
                $ty(s.to_string())
            }
        }
        impl From<String> for $ty {
            fn from(s: String) -> Self {
                $ty(s)
            }
        }
    };
}
id_impls!(ObjId);
id_impls!(MorId);

/// Endpoints of a morphism.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Arrow {
    pub src: ObjId,
    pub dst: ObjId,
}

/// A finite groupoid as explicit tables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FiniteGroupoid {
    objects: BTreeSet<ObjId>,
    morphisms: BTreeMap<MorId, Arrow>,
    identity: BTreeMap<ObjId, MorId>,
    /// `(after, before) -> after∘before`
    compose: BTreeMap<(MorId, MorId), MorId>,
    inverse: BTreeMap<MorId, MorId>,
}

impl FiniteGroupoid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_object(&mut self, o: impl Into<ObjId>) {
        self.objects.insert(o.into());
    }

    pub fn add_morphism(&mut self, id: impl Into<MorId>, src: impl Into<ObjId>, dst: impl Into<ObjId>) {
        self.morphisms.insert(
            id.into(),
            Arrow {
                src: src.into(),
                dst: dst.into(),
            },
        );
    }

    pub fn set_identity(&mut self, x: impl Into<ObjId>, m: impl Into<MorId>) {
        self.identity.insert(x.into(), m.into());
    }

    pub fn set_compose(&mut self, after: impl Into<MorId>, before: impl Into<MorId>, result: impl Into<MorId>) {
        self.compose.insert((after.into(), before.into()), result.into());
    }

    /// Record `m` and `m_inv` as mutually inverse.
    pub fn set_inverse_pair(&mut self, m: impl Into<MorId>, m_inv: impl Into<MorId>) {
        let m = m.into();
        let m_inv = m_inv.into();
        self.inverse.insert(m.clone(), m_inv.clone());
        self.inverse.insert(m_inv, m);
    }

    pub fn objects(&self) -> impl Iterator<Item = &ObjId> {
        self.objects.iter()
    }

    pub fn object_set(&self) -> &BTreeSet<ObjId> {
        &self.objects
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn has_object(&self, o: &ObjId) -> bool {
        self.objects.contains(o)
    }

    pub fn morphisms(&self) -> impl Iterator<Item = (&MorId, &Arrow)> {
        self.morphisms.iter()
    }

    pub fn morphism_ids(&self) -> impl Iterator<Item = &MorId> {
        self.morphisms.keys()
    }

    pub fn morphism_count(&self) -> usize {
        self.morphisms.len()
    }

    pub fn has_morphism(&self, m: &MorId) -> bool {
        self.morphisms.contains_key(m)
    }

    pub fn arrow(&self, m: &MorId) -> Option<&Arrow> {
        self.morphisms.get(m)
    }

    /// Source of `m`. Panics when `m` is unknown; use on validated data.
    pub fn src(&self, m: &MorId) -> &ObjId {
        &self.morphisms[m].src
    }

    pub fn dst(&self, m: &MorId) -> &ObjId {
        &self.morphisms[m].dst
    }

    pub fn get_identity(&self, x: &ObjId) -> Option<&MorId> {
        self.identity.get(x)
    }

    pub fn identity_of(&self, x: &ObjId) -> &MorId {
        &self.identity[x]
    }

    pub fn is_identity(&self, m: &MorId) -> bool {
        self.identity.values().any(|i| i == m)
    }

    /// `after ∘ before`, when the table has it.
    pub fn compose(&self, after: &MorId, before: &MorId) -> Option<&MorId> {
        self.compose.get(&(after.clone(), before.clone()))
    }

    /// `after ∘ before` on validated data.
    pub fn compose_of(&self, after: &MorId, before: &MorId) -> &MorId {
        self.compose
            .get(&(after.clone(), before.clone()))
            .unwrap_or_else(|| panic!("composition table missing {after} ∘ {before}"))
    }

    pub fn get_inverse(&self, m: &MorId) -> Option<&MorId> {
        self.inverse.get(m)
    }

    pub fn inverse_of(&self, m: &MorId) -> &MorId {
        &self.inverse[m]
    }

    /// Morphisms from `x` to `y`, in identifier order.
    pub fn hom(&self, x: &ObjId, y: &ObjId) -> Vec<&MorId> {
        self.morphisms
            .iter()
            .filter(|(_, a)| &a.src == x && &a.dst == y)
            .map(|(m, _)| m)
            .collect()
    }

    /// True when the only morphisms are identities.
    pub fn is_discrete(&self) -> bool {
        self.morphisms.len() == self.objects.len()
            && self.morphisms.iter().all(|(_, a)| a.src == a.dst)
    }

    pub fn compose_table(&self) -> impl Iterator<Item = (&(MorId, MorId), &MorId)> {
        self.compose.iter()
    }

    /// Connected components of the underlying graph, each a sorted object set.
    pub fn connected_components(&self) -> Vec<BTreeSet<ObjId>> {
        let mut uf = UnionFind::new(self.objects.iter().cloned());
        for a in self.morphisms.values() {
            uf.union(&a.src, &a.dst);
        }
        uf.classes()
    }

    /// Check every groupoid law; never fails, malformed tables become violations.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        for (m, a) in &self.morphisms {
            if !self.objects.contains(&a.src) || !self.objects.contains(&a.dst) {
                rep.violation("endpoints", vec![m.to_string()]);
            }
        }
        for x in &self.objects {
            match self.identity.get(x) {
                None => rep.violation("identity-missing", vec![x.to_string()]),
                Some(i) => match self.morphisms.get(i) {
                    None => rep.violation("identity-missing", vec![x.to_string(), i.to_string()]),
                    Some(a) => {
                        if &a.src != x || &a.dst != x {
                            rep.violation("identity-endpoints", vec![x.to_string(), i.to_string()]);
                        }
                    }
                },
            }
        }
        for (x, i) in &self.identity {
            if !self.objects.contains(x) {
                rep.violation("identity-dangling", vec![x.to_string(), i.to_string()]);
            }
        }
        // Totality and typing of the composition table.
        let mors: Vec<&MorId> = self.morphisms.keys().collect();
        for m2 in &mors {
            for m1 in &mors {
                let composable = self.dst_opt(m1) == self.src_opt(m2) && self.dst_opt(m1).is_some();
                match (composable, self.compose(m2, m1)) {
                    (true, None) => {
                        rep.violation("compose-missing", vec![m2.to_string(), m1.to_string()])
                    }
                    (true, Some(c)) => match self.morphisms.get(c) {
                        None => rep.violation(
                            "compose-dangling",
                            vec![m2.to_string(), m1.to_string(), c.to_string()],
                        ),
                        Some(a) => {
                            if Some(&a.src) != self.src_opt(m1) || Some(&a.dst) != self.dst_opt(m2) {
                                rep.violation(
                                    "compose-endpoints",
                                    vec![m2.to_string(), m1.to_string(), c.to_string()],
                                );
                            }
                        }
                    },
                    (false, Some(_)) => {
                        rep.violation("compose-noncomposable", vec![m2.to_string(), m1.to_string()])
                    }
                    (false, None) => {}
                }
            }
        }
        // Unit laws.
        for (m, a) in &self.morphisms {
            if let (Some(is), Some(id)) = (self.identity.get(&a.src), self.identity.get(&a.dst)) {
                if self.compose(m, is).map(|c| c == m) != Some(true) {
                    rep.violation("unit-right", vec![m.to_string()]);
                }
                if self.compose(id, m).map(|c| c == m) != Some(true) {
                    rep.violation("unit-left", vec![m.to_string()]);
                }
            }
        }
        // Associativity on all composable triples.
        for m1 in &mors {
            for m2 in &mors {
                if self.dst_opt(m1) != self.src_opt(m2) || self.dst_opt(m1).is_none() {
                    continue;
                }
                for m3 in &mors {
                    if self.dst_opt(m2) != self.src_opt(m3) || self.dst_opt(m2).is_none() {
                        continue;
                    }
                    let left = self
                        .compose(m2, m1)
                        .and_then(|m21| self.compose(m3, m21));
                    let right = self
                        .compose(m3, m2)
                        .and_then(|m32| self.compose(m32, m1));
                    match (left, right) {
                        (Some(l), Some(r)) if l == r => {}
                        _ => rep.violation(
                            "associativity",
                            vec![m3.to_string(), m2.to_string(), m1.to_string()],
                        ),
                    }
                }
            }
        }
        // Inverse laws.
        for (m, a) in &self.morphisms {
            match self.inverse.get(m) {
                None => rep.violation("inverse-law", vec![m.to_string()]),
                Some(mi) => match self.morphisms.get(mi) {
                    None => rep.violation("inverse-law", vec![m.to_string(), mi.to_string()]),
                    Some(ai) => {
                        if ai.src != a.dst || ai.dst != a.src {
                            rep.violation("inverse-endpoints", vec![m.to_string(), mi.to_string()]);
                        } else {
                            let li = self.compose(mi, m);
                            let ri = self.compose(m, mi);
                            if li != self.identity.get(&a.src) || ri != self.identity.get(&a.dst) {
                                rep.violation("inverse-law", vec![m.to_string(), mi.to_string()]);
                            }
                        }
                    }
                },
            }
        }
        rep
    }

    fn src_opt(&self, m: &MorId) -> Option<&ObjId> {
        self.morphisms.get(m).map(|a| &a.src)
    }

    fn dst_opt(&self, m: &MorId) -> Option<&ObjId> {
        self.morphisms.get(m).map(|a| &a.dst)
    }
}

/// A finite groupoid together with an involution functor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvolutiveGroupoid {
    carrier: FiniteGroupoid,
    invol_obj: BTreeMap<ObjId, ObjId>,
    invol_mor: BTreeMap<MorId, MorId>,
}

impl InvolutiveGroupoid {
    pub fn new(
        carrier: FiniteGroupoid,
        invol_obj: BTreeMap<ObjId, ObjId>,
        invol_mor: BTreeMap<MorId, MorId>,
    ) -> Self {
        InvolutiveGroupoid {
            carrier,
            invol_obj,
            invol_mor,
        }
    }

    pub fn carrier(&self) -> &FiniteGroupoid {
        &self.carrier
    }

    pub fn alpha_obj(&self, o: &ObjId) -> &ObjId {
        &self.invol_obj[o]
    }

    pub fn alpha_mor(&self, m: &MorId) -> &MorId {
        &self.invol_mor[m]
    }

    pub fn invol_obj_map(&self) -> &BTreeMap<ObjId, ObjId> {
        &self.invol_obj
    }

    pub fn invol_mor_map(&self) -> &BTreeMap<MorId, MorId> {
        &self.invol_mor
    }

    pub fn is_fixed_obj(&self, o: &ObjId) -> bool {
        self.invol_obj.get(o) == Some(o)
    }

    pub fn is_fixed_mor(&self, m: &MorId) -> bool {
        self.invol_mor.get(m) == Some(m)
    }

    /// Objects fixed by the involution, in identifier order.
    pub fn fixed_objects(&self) -> Vec<ObjId> {
        self.carrier
            .objects()
            .filter(|o| self.is_fixed_obj(o))
            .cloned()
            .collect()
    }

    /// True when every object is fixed (morphisms may still move).
    pub fn all_objects_fixed(&self) -> bool {
        self.carrier.objects().all(|o| self.is_fixed_obj(o))
    }

    /// Carrier laws plus functoriality and involutivity of the involution.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = self.carrier.validate();
        for o in self.carrier.objects() {
            match self.invol_obj.get(o) {
                None => rep.violation("involution-obj-total", vec![o.to_string()]),
                Some(io) => {
                    if !self.carrier.has_object(io) {
                        rep.violation("involution-obj-total", vec![o.to_string(), io.to_string()]);
                    } else if self.invol_obj.get(io) != Some(o) {
                        rep.violation("involution-involutive", vec![o.to_string()]);
                    }
                }
            }
        }
        for (m, a) in self.carrier.morphisms() {
            match self.invol_mor.get(m) {
                None => rep.violation("involution-mor-total", vec![m.to_string()]),
                Some(im) => match self.carrier.arrow(im) {
                    None => rep.violation("involution-mor-total", vec![m.to_string(), im.to_string()]),
                    Some(ia) => {
                        if self.invol_obj.get(&a.src) != Some(&ia.src)
                            || self.invol_obj.get(&a.dst) != Some(&ia.dst)
                        {
                            rep.violation("involution-endpoints", vec![m.to_string()]);
                        }
                        if self.invol_mor.get(im) != Some(m) {
                            rep.violation("involution-involutive", vec![m.to_string()]);
                        }
                    }
                },
            }
        }
        // Functoriality of the involution.
        for x in self.carrier.objects() {
            if let (Some(i), Some(ix)) = (self.carrier.get_identity(x), self.invol_obj.get(x)) {
                if self.invol_mor.get(i) != self.carrier.get_identity(ix) {
                    rep.violation("involution-identity", vec![x.to_string()]);
                }
            }
        }
        for ((m2, m1), c) in self.carrier.compose_table() {
            if let (Some(im2), Some(im1), Some(ic)) = (
                self.invol_mor.get(m2),
                self.invol_mor.get(m1),
                self.invol_mor.get(c),
            ) {
                if self.carrier.compose(im2, im1) != Some(ic) {
                    rep.violation("involution-compose", vec![m2.to_string(), m1.to_string()]);
                }
            }
        }
        rep
    }
}

/// A functor commuting with the involutions on both sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivariantFunctor {
    pub dom: InvolutiveGroupoid,
    pub cod: InvolutiveGroupoid,
    pub on_obj: BTreeMap<ObjId, ObjId>,
    pub on_mor: BTreeMap<MorId, MorId>,
}

impl EquivariantFunctor {
    pub fn new(
        dom: InvolutiveGroupoid,
        cod: InvolutiveGroupoid,
        on_obj: BTreeMap<ObjId, ObjId>,
        on_mor: BTreeMap<MorId, MorId>,
    ) -> Self {
        EquivariantFunctor {
            dom,
            cod,
            on_obj,
            on_mor,
        }
    }

    pub fn identity(g: &InvolutiveGroupoid) -> Self {
        let on_obj = g.carrier().objects().map(|o| (o.clone(), o.clone())).collect();
        let on_mor = g
            .carrier()
            .morphism_ids()
            .map(|m| (m.clone(), m.clone()))
            .collect();
        EquivariantFunctor::new(g.clone(), g.clone(), on_obj, on_mor)
    }

    pub fn apply_obj(&self, o: &ObjId) -> &ObjId {
        &self.on_obj[o]
    }

    pub fn apply_mor(&self, m: &MorId) -> &MorId {
        &self.on_mor[m]
    }

    /// Functoriality plus equivariance; assumes dom and cod individually valid.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        for o in self.dom.carrier().objects() {
            match self.on_obj.get(o) {
                None => rep.violation("functor-obj-total", vec![o.to_string()]),
                Some(fo) => {
                    if !self.cod.carrier().has_object(fo) {
                        rep.violation("functor-obj-total", vec![o.to_string(), fo.to_string()]);
                    }
                }
            }
        }
        for (m, a) in self.dom.carrier().morphisms() {
            match self.on_mor.get(m) {
                None => rep.violation("functor-mor-total", vec![m.to_string()]),
                Some(fm) => match self.cod.carrier().arrow(fm) {
                    None => rep.violation("functor-mor-total", vec![m.to_string(), fm.to_string()]),
                    Some(fa) => {
                        if self.on_obj.get(&a.src) != Some(&fa.src)
                            || self.on_obj.get(&a.dst) != Some(&fa.dst)
                        {
                            rep.violation("functor-endpoints", vec![m.to_string()]);
                        }
                    }
                },
            }
        }
        for x in self.dom.carrier().objects() {
            if let (Some(i), Some(fx)) = (self.dom.carrier().get_identity(x), self.on_obj.get(x)) {
                if self.on_mor.get(i) != self.cod.carrier().get_identity(fx) {
                    rep.violation("functor-identity", vec![x.to_string()]);
                }
            }
        }
        for ((m2, m1), c) in self.dom.carrier().compose_table() {
            if let (Some(f2), Some(f1), Some(fc)) =
                (self.on_mor.get(m2), self.on_mor.get(m1), self.on_mor.get(c))
            {
                if self.cod.carrier().compose(f2, f1) != Some(fc) {
                    rep.violation("functor-compose", vec![m2.to_string(), m1.to_string()]);
                }
            }
        }
        for o in self.dom.carrier().objects() {
            let lhs = self.on_obj.get(self.dom.alpha_obj(o));
            let rhs = self.on_obj.get(o).map(|fo| self.cod.alpha_obj(fo));
            if lhs != rhs {
                rep.violation("equivariance", vec![o.to_string()]);
            }
        }
        for m in self.dom.carrier().morphism_ids() {
            let lhs = self.on_mor.get(self.dom.alpha_mor(m));
            let rhs = self.on_mor.get(m).map(|fm| self.cod.alpha_mor(fm));
            if lhs != rhs {
                rep.violation("equivariance", vec![m.to_string()]);
            }
        }
        rep
    }

    /// Image of the object map as a set.
    pub fn object_image(&self) -> BTreeSet<ObjId> {
        self.on_obj.values().cloned().collect()
    }
}

/// `after ∘ before`, componentwise on the tables.
///
/// Panics when the middles do not match; callers pass functors over the same
/// literal groupoid.
pub fn compose_functors(after: &EquivariantFunctor, before: &EquivariantFunctor) -> EquivariantFunctor {
    assert_eq!(
        before.cod, after.dom,
        "compose_functors: codomain/domain mismatch"
    );
    let on_obj = before
        .on_obj
        .iter()
        .map(|(o, v)| (o.clone(), after.apply_obj(v).clone()))
        .collect();
    let on_mor = before
        .on_mor
        .iter()
        .map(|(m, v)| (m.clone(), after.apply_mor(v).clone()))
        .collect();
    EquivariantFunctor::new(before.dom.clone(), after.cod.clone(), on_obj, on_mor)
}

/// Outcome of a validation pass. `ok` iff no violation was recorded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub law: String,
    pub elements: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn violation(&mut self, law: &str, elements: Vec<String>) {
        self.violations.push(Violation {
            law: law.to_string(),
            elements,
        });
    }

    pub fn assert_ok(&self, context: &str) {
        assert!(
            self.ok(),
            "{context}: validation failed: {:?}",
            self.violations
        );
    }
}

/// Union-find over identifiers.
pub(crate) struct UnionFind {
    parent: BTreeMap<ObjId, ObjId>,
}

impl UnionFind {
    pub(crate) fn new(items: impl Iterator<Item = ObjId>) -> Self {
        UnionFind {
            parent: items.map(|o| (o.clone(), o)).collect(),
        }
    }

    pub(crate) fn find(&mut self, o: &ObjId) -> ObjId {
        let p = self.parent[o].clone();
        if &p == o {
            return p;
        }
        let root = self.find(&p);
        self.parent.insert(o.clone(), root.clone());
        root
    }

    pub(crate) fn union(&mut self, a: &ObjId, b: &ObjId) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            // Smaller identifier wins, keeping classes deterministic.
            if ra < rb {
                self.parent.insert(rb, ra);
            } else {
                self.parent.insert(ra, rb);
            }
        }
    }

    pub(crate) fn classes(&mut self) -> Vec<BTreeSet<ObjId>> {
        let keys: Vec<ObjId> = self.parent.keys().cloned().collect();
        let mut classes: BTreeMap<ObjId, BTreeSet<ObjId>> = BTreeMap::new();
        for k in keys {
            let r = self.find(&k);
            classes.entry(r).or_default().insert(k);
        }
        classes.into_values().collect()
    }
}

// ---------------------------------------------------------------------------
// Basic functors between Gpd and its involutive counterpart.
// ---------------------------------------------------------------------------

/// Forget the involution.
pub fn underlying(g: &InvolutiveGroupoid) -> FiniteGroupoid {
    g.carrier().clone()
}

/// Equip a groupoid with the identity involution.
pub fn trivial_involution(g: FiniteGroupoid) -> InvolutiveGroupoid {
    let invol_obj = g.objects().map(|o| (o.clone(), o.clone())).collect();
    let invol_mor = g.morphism_ids().map(|m| (m.clone(), m.clone())).collect();
    InvolutiveGroupoid::new(g, invol_obj, invol_mor)
}

fn fresh_primed(used: &BTreeSet<String>, base: &str) -> String {
    let mut candidate = format!("{base}'");
    while used.contains(&candidate) {
        candidate.push('\'');
    }
    candidate
}

/// Two disjoint copies of `g` with the swap involution. The first copy keeps
/// its names, the second gets a prime appended (escalated on collision).
pub fn free_double(g: &FiniteGroupoid) -> InvolutiveGroupoid {
    let mut used: BTreeSet<String> = g.objects().map(|o| o.to_string()).collect();
    let mut obj_copy: BTreeMap<ObjId, ObjId> = BTreeMap::new();
    for o in g.objects() {
        let primed = fresh_primed(&used, o.as_str());
        used.insert(primed.clone());
        obj_copy.insert(o.clone(), ObjId::new(primed));
    }
    let mut used_m: BTreeSet<String> = g.morphism_ids().map(|m| m.to_string()).collect();
    let mut mor_copy: BTreeMap<MorId, MorId> = BTreeMap::new();
    for m in g.morphism_ids() {
        let primed = fresh_primed(&used_m, m.as_str());
        used_m.insert(primed.clone());
        mor_copy.insert(m.clone(), MorId::new(primed));
    }

    let mut d = FiniteGroupoid::new();
    for o in g.objects() {
        d.add_object(o.clone());
        d.add_object(obj_copy[o].clone());
    }
    for (m, a) in g.morphisms() {
        d.add_morphism(m.clone(), a.src.clone(), a.dst.clone());
        d.add_morphism(mor_copy[m].clone(), obj_copy[&a.src].clone(), obj_copy[&a.dst].clone());
    }
    for o in g.objects() {
        let i = g.identity_of(o);
        d.set_identity(o.clone(), i.clone());
        d.set_identity(obj_copy[o].clone(), mor_copy[i].clone());
    }
    for ((m2, m1), c) in g.compose_table() {
        d.set_compose(m2.clone(), m1.clone(), c.clone());
        d.set_compose(mor_copy[m2].clone(), mor_copy[m1].clone(), mor_copy[c].clone());
    }
    for m in g.morphism_ids() {
        let mi = g.inverse_of(m);
        d.set_inverse_pair(m.clone(), mi.clone());
        d.set_inverse_pair(mor_copy[m].clone(), mor_copy[mi].clone());
    }

    let mut invol_obj = BTreeMap::new();
    for (o, o2) in &obj_copy {
        invol_obj.insert(o.clone(), o2.clone());
        invol_obj.insert(o2.clone(), o.clone());
    }
    let mut invol_mor = BTreeMap::new();
    for (m, m2) in &mor_copy {
        invol_mor.insert(m.clone(), m2.clone());
        invol_mor.insert(m2.clone(), m.clone());
    }
    InvolutiveGroupoid::new(d, invol_obj, invol_mor)
}

/// Image of a plain functor `q: G -> H` under the doubling construction:
/// `free_double(G) -> free_double(H)`, copies mapped to copies.
pub fn free_double_functor(
    g: &FiniteGroupoid,
    h: &FiniteGroupoid,
    on_obj: &BTreeMap<ObjId, ObjId>,
    on_mor: &BTreeMap<MorId, MorId>,
) -> EquivariantFunctor {
    let sg = free_double(g);
    let sh = free_double(h);
    let mut obj_map = BTreeMap::new();
    for o in g.objects() {
        let fo = &on_obj[o];
        obj_map.insert(o.clone(), fo.clone());
        obj_map.insert(sg.alpha_obj(o).clone(), sh.alpha_obj(fo).clone());
    }
    let mut mor_map = BTreeMap::new();
    for m in g.morphism_ids() {
        let fm = &on_mor[m];
        mor_map.insert(m.clone(), fm.clone());
        mor_map.insert(sg.alpha_mor(m).clone(), sh.alpha_mor(fm).clone());
    }
    EquivariantFunctor::new(sg, sh, obj_map, mor_map)
}

/// Full subgroupoid on a subset of objects. The subset is taken literally;
/// for involutive use it must be stable under the involution.
pub fn full_subgroupoid_plain(g: &FiniteGroupoid, objs: &BTreeSet<ObjId>) -> FiniteGroupoid {
    let mut s = FiniteGroupoid::new();
    for o in objs {
        s.add_object(o.clone());
    }
    let keep: BTreeSet<MorId> = g
        .morphisms()
        .filter(|(_, a)| objs.contains(&a.src) && objs.contains(&a.dst))
        .map(|(m, _)| m.clone())
        .collect();
    for m in &keep {
        let a = g.arrow(m).unwrap();
        s.add_morphism(m.clone(), a.src.clone(), a.dst.clone());
    }
    for o in objs {
        s.set_identity(o.clone(), g.identity_of(o).clone());
    }
    for ((m2, m1), c) in g.compose_table() {
        if keep.contains(m2) && keep.contains(m1) {
            s.set_compose(m2.clone(), m1.clone(), c.clone());
        }
    }
    for m in &keep {
        s.set_inverse_pair(m.clone(), g.inverse_of(m).clone());
    }
    s
}

/// Full involutive subgroupoid on an involution-stable object set.
pub fn full_subgroupoid(g: &InvolutiveGroupoid, objs: &BTreeSet<ObjId>) -> InvolutiveGroupoid {
    for o in objs {
        assert!(
            objs.contains(g.alpha_obj(o)),
            "full_subgroupoid: object set not stable under the involution"
        );
    }
    let carrier = full_subgroupoid_plain(g.carrier(), objs);
    let invol_obj = objs.iter().map(|o| (o.clone(), g.alpha_obj(o).clone())).collect();
    let invol_mor = carrier
        .morphism_ids()
        .map(|m| (m.clone(), g.alpha_mor(m).clone()))
        .collect();
    InvolutiveGroupoid::new(carrier, invol_obj, invol_mor)
}

/// The inclusion of an involution-stable full subgroupoid.
pub fn inclusion_functor(sub: &InvolutiveGroupoid, g: &InvolutiveGroupoid) -> EquivariantFunctor {
    let on_obj = sub.carrier().objects().map(|o| (o.clone(), o.clone())).collect();
    let on_mor = sub
        .carrier()
        .morphism_ids()
        .map(|m| (m.clone(), m.clone()))
        .collect();
    EquivariantFunctor::new(sub.clone(), g.clone(), on_obj, on_mor)
}

/// Full subgroupoid of fixed objects, with the involution restricted to it.
///
/// The restriction is the identity on objects but may still move morphisms
/// (an automorphism of a fixed object need not be fixed).
pub fn fixed_full(g: &InvolutiveGroupoid) -> InvolutiveGroupoid {
    let objs: BTreeSet<ObjId> = g.fixed_objects().into_iter().collect();
    full_subgroupoid(g, &objs)
}

/// Subgroupoid of fixed objects and fixed morphisms. Closed under composition
/// and inverses because the involution is a functor.
pub fn fixed_strict(g: &InvolutiveGroupoid) -> FiniteGroupoid {
    let objs: BTreeSet<ObjId> = g.fixed_objects().into_iter().collect();
    let mut s = FiniteGroupoid::new();
    for o in &objs {
        s.add_object(o.clone());
    }
    let keep: BTreeSet<MorId> = g
        .carrier()
        .morphisms()
        .filter(|(m, a)| g.is_fixed_mor(m) && objs.contains(&a.src) && objs.contains(&a.dst))
        .map(|(m, _)| m.clone())
        .collect();
    for m in &keep {
        let a = g.carrier().arrow(m).unwrap();
        s.add_morphism(m.clone(), a.src.clone(), a.dst.clone());
    }
    for o in &objs {
        s.set_identity(o.clone(), g.carrier().identity_of(o).clone());
    }
    for ((m2, m1), c) in g.carrier().compose_table() {
        if keep.contains(m2) && keep.contains(m1) {
            s.set_compose(m2.clone(), m1.clone(), c.clone());
        }
    }
    for m in &keep {
        s.set_inverse_pair(m.clone(), g.carrier().inverse_of(m).clone());
    }
    s
}

// ---------------------------------------------------------------------------
// Products and pairings.
// ---------------------------------------------------------------------------

pub fn pair_obj(a: &ObjId, b: &ObjId) -> ObjId {
    ObjId::new(format!("({a}|{b})"))
}

pub fn pair_mor(a: &MorId, b: &MorId) -> MorId {
    MorId::new(format!("({a}|{b})"))
}

/// Binary product with the componentwise involution, plus both projections.
pub fn product(
    a: &InvolutiveGroupoid,
    b: &InvolutiveGroupoid,
) -> (InvolutiveGroupoid, EquivariantFunctor, EquivariantFunctor) {
    let mut p = FiniteGroupoid::new();
    let mut invol_obj = BTreeMap::new();
    let mut invol_mor = BTreeMap::new();
    let mut pr1_obj = BTreeMap::new();
    let mut pr2_obj = BTreeMap::new();
    let mut pr1_mor = BTreeMap::new();
    let mut pr2_mor = BTreeMap::new();

    for x in a.carrier().objects() {
        for y in b.carrier().objects() {
            let o = pair_obj(x, y);
            p.add_object(o.clone());
            invol_obj.insert(o.clone(), pair_obj(a.alpha_obj(x), b.alpha_obj(y)));
            pr1_obj.insert(o.clone(), x.clone());
            pr2_obj.insert(o, y.clone());
        }
    }
    for (m, am) in a.carrier().morphisms() {
        for (n, bn) in b.carrier().morphisms() {
            let id = pair_mor(m, n);
            p.add_morphism(id.clone(), pair_obj(&am.src, &bn.src), pair_obj(&am.dst, &bn.dst));
            invol_mor.insert(id.clone(), pair_mor(a.alpha_mor(m), b.alpha_mor(n)));
            pr1_mor.insert(id.clone(), m.clone());
            pr2_mor.insert(id, n.clone());
        }
    }
    for x in a.carrier().objects() {
        for y in b.carrier().objects() {
            p.set_identity(
                pair_obj(x, y),
                pair_mor(a.carrier().identity_of(x), b.carrier().identity_of(y)),
            );
        }
    }
    let a_mors: Vec<MorId> = a.carrier().morphism_ids().cloned().collect();
    let b_mors: Vec<MorId> = b.carrier().morphism_ids().cloned().collect();
    for m2 in &a_mors {
        for m1 in &a_mors {
            let Some(cm) = a.carrier().compose(m2, m1) else { continue };
            for n2 in &b_mors {
                for n1 in &b_mors {
                    let Some(cn) = b.carrier().compose(n2, n1) else { continue };
                    p.set_compose(pair_mor(m2, n2), pair_mor(m1, n1), pair_mor(cm, cn));
                }
            }
        }
    }
    for m in &a_mors {
        for n in &b_mors {
            p.set_inverse_pair(
                pair_mor(m, n),
                pair_mor(a.carrier().inverse_of(m), b.carrier().inverse_of(n)),
            );
        }
    }
    let prod = InvolutiveGroupoid::new(p, invol_obj, invol_mor);
    let pr1 = EquivariantFunctor::new(prod.clone(), a.clone(), pr1_obj, pr1_mor);
    let pr2 = EquivariantFunctor::new(prod.clone(), b.clone(), pr2_obj, pr2_mor);
    (prod, pr1, pr2)
}

/// Pairing `⟨f, g⟩: A -> B×C` of two functors with a common domain into the
/// given product.
pub fn pair_into_product(
    f: &EquivariantFunctor,
    g: &EquivariantFunctor,
    prod: &InvolutiveGroupoid,
) -> EquivariantFunctor {
    assert_eq!(f.dom, g.dom, "pair_into_product: domains differ");
    let on_obj = f
        .on_obj
        .iter()
        .map(|(o, fo)| (o.clone(), pair_obj(fo, g.apply_obj(o))))
        .collect();
    let on_mor = f
        .on_mor
        .iter()
        .map(|(m, fm)| (m.clone(), pair_mor(fm, g.apply_mor(m))))
        .collect();
    EquivariantFunctor::new(f.dom.clone(), prod.clone(), on_obj, on_mor)
}

/// The unique map `G -> 1` into the terminal involutive groupoid.
pub fn terminal_map(g: &InvolutiveGroupoid) -> EquivariantFunctor {
    let unit = trivial_involution(stock::unit());
    let o = ObjId::new("0");
    let i = MorId::new("1_0");
    let on_obj = g.carrier().objects().map(|x| (x.clone(), o.clone())).collect();
    let on_mor = g
        .carrier()
        .morphism_ids()
        .map(|m| (m.clone(), i.clone()))
        .collect();
    EquivariantFunctor::new(g.clone(), unit, on_obj, on_mor)
}

// ---------------------------------------------------------------------------
// Stock groupoids.
// ---------------------------------------------------------------------------

/// Small standard groupoids used throughout the tests and demos.
pub mod stock {
    use super::*;

    /// The terminal groupoid: one object `0`.
    pub fn unit() -> FiniteGroupoid {
        let mut g = FiniteGroupoid::new();
        g.add_object("0");
        g.add_morphism("1_0", "0", "0");
        g.set_identity("0", "1_0");
        g.set_compose("1_0", "1_0", "1_0");
        g.set_inverse_pair("1_0", "1_0");
        g
    }

    /// The empty groupoid.
    pub fn empty() -> FiniteGroupoid {
        FiniteGroupoid::new()
    }

    /// Two objects `0`, `1` and one isomorphism `phi` between them.
    pub fn interval() -> FiniteGroupoid {
        let mut g = FiniteGroupoid::new();
        g.add_object("0");
        g.add_object("1");
        g.add_morphism("1_0", "0", "0");
        g.add_morphism("1_1", "1", "1");
        g.add_morphism("phi", "0", "1");
        g.add_morphism("phi_inv", "1", "0");
        g.set_identity("0", "1_0");
        g.set_identity("1", "1_1");
        for (m2, m1, c) in [
            ("1_0", "1_0", "1_0"),
            ("1_1", "1_1", "1_1"),
            ("phi", "1_0", "phi"),
            ("1_1", "phi", "phi"),
            ("phi_inv", "1_1", "phi_inv"),
            ("1_0", "phi_inv", "phi_inv"),
            ("phi_inv", "phi", "1_0"),
            ("phi", "phi_inv", "1_1"),
        ] {
            g.set_compose(m2, m1, c);
        }
        g.set_inverse_pair("1_0", "1_0");
        g.set_inverse_pair("1_1", "1_1");
        g.set_inverse_pair("phi", "phi_inv");
        g
    }

    /// One object `b` with cyclic automorphism group of order `n`
    /// (`s0 = 1_b`, generator `s1`).
    pub fn b_cyclic(n: usize) -> FiniteGroupoid {
        assert!(n >= 1);
        let mut g = FiniteGroupoid::new();
        g.add_object("b");
        for k in 0..n {
            g.add_morphism(format!("s{k}"), "b", "b");
        }
        g.set_identity("b", "s0");
        for i in 0..n {
            for j in 0..n {
                g.set_compose(format!("s{i}"), format!("s{j}"), format!("s{}", (i + j) % n));
            }
        }
        for k in 0..n {
            g.set_inverse_pair(format!("s{k}"), format!("s{}", (n - k) % n));
        }
        g
    }

    /// `b_cyclic(n)` with the inversion involution `s_k -> s_{n-k}`.
    pub fn b_cyclic_inversion(n: usize) -> InvolutiveGroupoid {
        let g = b_cyclic(n);
        let invol_obj = [(ObjId::new("b"), ObjId::new("b"))].into_iter().collect();
        let invol_mor = (0..n)
            .map(|k| (MorId::new(format!("s{k}")), MorId::new(format!("s{}", (n - k) % n))))
            .collect();
        InvolutiveGroupoid::new(g, invol_obj, invol_mor)
    }

    /// Exactly one morphism between any ordered pair of the given objects.
    pub fn indiscrete(objs: &[&str]) -> FiniteGroupoid {
        let mut g = FiniteGroupoid::new();
        for o in objs {
            g.add_object(*o);
        }
        let mid = |x: &str, y: &str| MorId::new(format!("{x}>{y}"));
        for x in objs {
            for y in objs {
                g.add_morphism(mid(x, y), *x, *y);
            }
        }
        for o in objs {
            g.set_identity(*o, mid(o, o));
        }
        for x in objs {
            for y in objs {
                for z in objs {
                    g.set_compose(mid(y, z), mid(x, y), mid(x, z));
                }
            }
        }
        for x in objs {
            for y in objs {
                g.set_inverse_pair(mid(x, y), mid(y, x));
            }
        }
        g
    }

    /// Indiscrete groupoid with the involution induced by an object swap map.
    pub fn indiscrete_with(objs: &[&str], swap: &[(&str, &str)]) -> InvolutiveGroupoid {
        let g = indiscrete(objs);
        let mut obj_map: BTreeMap<ObjId, ObjId> =
            objs.iter().map(|o| (ObjId::new(*o), ObjId::new(*o))).collect();
        for (a, b) in swap {
            obj_map.insert(ObjId::new(*a), ObjId::new(*b));
            obj_map.insert(ObjId::new(*b), ObjId::new(*a));
        }
        let invol_mor = g
            .morphism_ids()
            .map(|m| {
                let a = g.arrow(m).unwrap();
                (
                    m.clone(),
                    MorId::new(format!("{}>{}", obj_map[&a.src], obj_map[&a.dst])),
                )
            })
            .collect();
        InvolutiveGroupoid::new(g, obj_map, invol_mor)
    }

    /// Connected groupoid on `objs` with cyclic vertex group of order `n`:
    /// morphisms are triples `(x, k, y)`.
    pub fn torsor(objs: &[&str], n: usize) -> FiniteGroupoid {
        assert!(n >= 1 && !objs.is_empty());
        let mut g = FiniteGroupoid::new();
        let mid = |x: &str, k: usize, y: &str| MorId::new(format!("t({x},{k},{y})"));
        for o in objs {
            g.add_object(*o);
        }
        for x in objs {
            for y in objs {
                for k in 0..n {
                    g.add_morphism(mid(x, k, y), *x, *y);
                }
            }
        }
        for o in objs {
            g.set_identity(*o, mid(o, 0, o));
        }
        for x in objs {
            for y in objs {
                for z in objs {
                    for i in 0..n {
                        for j in 0..n {
                            g.set_compose(mid(y, j, z), mid(x, i, y), mid(x, (i + j) % n, z));
                        }
                    }
                }
            }
        }
        for x in objs {
            for y in objs {
                for k in 0..n {
                    g.set_inverse_pair(mid(x, k, y), mid(y, (n - k) % n, x));
                }
            }
        }
        g
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn s_one() -> InvolutiveGroupoid {
        free_double(&stock::unit())
    }

    fn s_interval() -> InvolutiveGroupoid {
        free_double(&stock::interval())
    }

    #[test]
    fn free_double_of_unit_is_the_two_point_swap() {
        let s1 = s_one();
        assert_eq!(s1.carrier().object_count(), 2);
        assert_eq!(s1.carrier().morphism_count(), 2);
        assert_eq!(s1.alpha_obj(&ObjId::new("0")), &ObjId::new("0'"));
        assert_eq!(s1.alpha_obj(&ObjId::new("0'")), &ObjId::new("0"));
        s1.validate().assert_ok("S(1)");
        assert!(s1.fixed_objects().is_empty());
    }

    #[test]
    fn free_double_of_interval_has_eight_morphisms() {
        let si = s_interval();
        assert_eq!(si.carrier().object_count(), 4);
        assert_eq!(si.carrier().morphism_count(), 8);
        si.validate().assert_ok("S(I)");
        assert!(si.fixed_objects().is_empty());
        // The primed copy of phi connects the primed endpoints.
        let a = si.carrier().arrow(&MorId::new("phi'")).unwrap();
        assert_eq!(a.src, ObjId::new("0'"));
        assert_eq!(a.dst, ObjId::new("1'"));
    }

    #[test]
    fn free_double_of_empty_is_empty() {
        let s0 = free_double(&stock::empty());
        assert_eq!(s0.carrier().object_count(), 0);
        s0.validate().assert_ok("S(0)");
    }

    #[test]
    fn validate_accepts_b_z2_with_trivial_involution() {
        let g = trivial_involution(stock::b_cyclic(2));
        g.validate().assert_ok("B(Z2)!");
    }

    #[test]
    fn validate_rejects_missing_inverse() {
        let mut g = FiniteGroupoid::new();
        g.add_object("x");
        g.add_morphism("1_x", "x", "x");
        g.add_morphism("m", "x", "x");
        g.set_identity("x", "1_x");
        g.set_compose("1_x", "1_x", "1_x");
        g.set_compose("1_x", "m", "m");
        g.set_compose("m", "1_x", "m");
        g.set_compose("m", "m", "m"); // idempotent non-identity: no inverse can exist
        g.set_inverse_pair("1_x", "1_x");
        let rep = trivial_involution(g).validate();
        assert!(!rep.ok());
        assert!(rep.violations.iter().any(|v| v.law == "inverse-law"));
    }

    #[test]
    fn fixed_full_of_doubles_is_empty_and_of_trivial_is_whole() {
        assert_eq!(fixed_full(&s_interval()).carrier().object_count(), 0);
        assert_eq!(fixed_full(&s_one()).carrier().object_count(), 0);
        let b = trivial_involution(stock::b_cyclic(2));
        let f = fixed_full(&b);
        assert_eq!(f, b);
    }

    #[test]
    fn fixed_full_keeps_all_automorphisms_of_a_fixed_object() {
        // Objects a (fixed), b <-> c swapped; indiscrete.
        let g = stock::indiscrete_with(&["a", "b", "c"], &[("b", "c")]);
        g.validate().assert_ok("indiscrete abc");
        let f = fixed_full(&g);
        assert_eq!(f.carrier().object_count(), 1);
        assert_eq!(
            f.carrier()
                .hom(&ObjId::new("a"), &ObjId::new("a"))
                .len(),
            1
        );
        f.validate().assert_ok("fixed_full");
    }

    #[test]
    fn fixed_strict_drops_moved_morphisms() {
        // Inversion on B(Z3): object fixed, only the identity morphism fixed.
        let g = stock::b_cyclic_inversion(3);
        g.validate().assert_ok("B(Z3) inversion");
        let s = fixed_strict(&g);
        assert_eq!(s.object_count(), 1);
        assert_eq!(s.morphism_count(), 1);
        s.validate().assert_ok("fixed_strict of B(Z3) inversion");
        // Strictly smaller than the full fixed subgroupoid.
        assert_eq!(fixed_full(&g).carrier().morphism_count(), 3);
    }

    #[test]
    fn fixed_strict_of_swap_is_empty_and_of_trivial_is_whole() {
        assert_eq!(fixed_strict(&s_one()).object_count(), 0);
        let b = trivial_involution(stock::b_cyclic(2));
        assert_eq!(fixed_strict(&b), stock::b_cyclic(2));
    }

    #[test]
    fn underlying_and_trivial_involution_round_trip() {
        let b = stock::b_cyclic(2);
        assert_eq!(underlying(&trivial_involution(b.clone())), b);
        let u = underlying(&s_one());
        assert_eq!(u.object_count(), 2);
        let i = trivial_involution(stock::interval());
        assert_eq!(fixed_full(&i), i);
    }

    #[test]
    fn fixed_strict_is_subgroupoid_of_fixed_full() {
        for g in [
            s_one(),
            s_interval(),
            trivial_involution(stock::b_cyclic(3)),
            stock::b_cyclic_inversion(4),
            stock::indiscrete_with(&["a", "b", "c"], &[("b", "c")]),
        ] {
            let strict = fixed_strict(&g);
            let full = fixed_full(&g);
            assert_eq!(strict.object_set(), full.carrier().object_set());
            for m in strict.morphism_ids() {
                assert!(full.carrier().has_morphism(m));
            }
        }
    }

    #[test]
    fn identity_functor_validates_and_swap_breaking_map_does_not() {
        let s1 = s_one();
        EquivariantFunctor::identity(&s1).validate().assert_ok("id S(1)");

        // Both objects to 0: functorial but not equivariant.
        let on_obj = [("0", "0"), ("0'", "0")]
            .into_iter()
            .map(|(a, b)| (ObjId::new(a), ObjId::new(b)))
            .collect();
        let on_mor = [("1_0", "1_0"), ("1_0'", "1_0")]
            .into_iter()
            .map(|(a, b)| (MorId::new(a), MorId::new(b)))
            .collect();
        let f = EquivariantFunctor::new(s1.clone(), s1, on_obj, on_mor);
        let rep = f.validate();
        assert!(!rep.ok());
        assert!(rep.violations.iter().any(|v| v.law == "equivariance"));
    }

    #[test]
    fn doubled_collapse_functor_validates() {
        // The doubled copy of I -> 1.
        let i = stock::interval();
        let u = stock::unit();
        let on_obj = i.objects().map(|o| (o.clone(), ObjId::new("0"))).collect();
        let on_mor = i
            .morphism_ids()
            .map(|m| (m.clone(), MorId::new("1_0")))
            .collect();
        let f = free_double_functor(&i, &u, &on_obj, &on_mor);
        f.validate().assert_ok("S(I) -> S(1)");
        assert_eq!(f.apply_obj(&ObjId::new("1'")), &ObjId::new("0'"));
    }

    #[test]
    fn product_has_componentwise_structure() {
        let s1 = s_one();
        let (p, pr1, pr2) = product(&s1, &s1);
        p.validate().assert_ok("S(1) x S(1)");
        pr1.validate().assert_ok("pr1");
        pr2.validate().assert_ok("pr2");
        assert_eq!(p.carrier().object_count(), 4);
        // Componentwise involution: (0|0') is sent to (0'|0).
        assert_eq!(
            p.alpha_obj(&pair_obj(&ObjId::new("0"), &ObjId::new("0'"))),
            &pair_obj(&ObjId::new("0'"), &ObjId::new("0"))
        );
    }

    #[test]
    fn free_double_naming_survives_colliding_primes() {
        let mut g = FiniteGroupoid::new();
        g.add_object("x");
        g.add_object("x'");
        g.add_morphism("1_x", "x", "x");
        g.add_morphism("1_x'", "x'", "x'");
        g.set_identity("x", "1_x");
        g.set_identity("x'", "1_x'");
        g.set_compose("1_x", "1_x", "1_x");
        g.set_compose("1_x'", "1_x'", "1_x'");
        g.set_inverse_pair("1_x", "1_x");
        g.set_inverse_pair("1_x'", "1_x'");
        let d = free_double(&g);
        assert_eq!(d.carrier().object_count(), 4);
        d.validate().assert_ok("double with primes");
    }
}
