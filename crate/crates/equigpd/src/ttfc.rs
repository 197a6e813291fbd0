//! Pullbacks of fibrations, the explicit dependent product along a
//! fibration, its adjunction transposes, and diagonals.
//!
//! The dependent product is built pointwise: objects over a base object `y`
//! are partial sections of `f` over the fiber of `g` at `y`; morphisms over a
//! base morphism `u` are functors out of the tube `g* u` into `dom(f)` over
//! `dom(g)`. Composition uses one chosen lift from the cleavage of `g`; the
//! result provably does not depend on the choice, which the tests confirm by
//! rebuilding with the reversed tie-breaking.

use std::collections::{BTreeMap, BTreeSet};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::exec;
use crate::gpd::{
    pair_mor, pair_obj, EquivariantFunctor, FiniteGroupoid, InvolutiveGroupoid, MorId, ObjId,
};
use crate::model::{is_fibration, Cleavage};
use crate::search::FunctorSearch;

// ---------------------------------------------------------------------------
// Pullbacks.
// ---------------------------------------------------------------------------

/// A chosen pullback of `of` along `along`, with common codomain removed:
/// apex objects are pairs `(t|e)` with `along(t) = of(e)`.
#[derive(Debug, Clone)]
pub struct PullbackSquare {
    pub apex: InvolutiveGroupoid,
    /// Apex to `dom(along)`; the pulled-back fibration.
    pub proj1: EquivariantFunctor,
    /// Apex to `dom(of)`.
    pub proj2: EquivariantFunctor,
    pub along: EquivariantFunctor,
    pub of: EquivariantFunctor,
}

impl PullbackSquare {
    /// The mediating map of a cone `(u, v)`; panics when the cone does not
    /// commute, which callers rule out beforehand.
    pub fn mediating(&self, u: &EquivariantFunctor, v: &EquivariantFunctor) -> EquivariantFunctor {
        assert_eq!(u.dom, v.dom, "mediating: cone legs have different domains");
        assert_eq!(
            crate::gpd::compose_functors(&self.along, u),
            crate::gpd::compose_functors(&self.of, v),
            "mediating: cone does not commute"
        );
        let on_obj = u
            .on_obj
            .iter()
            .map(|(t, ut)| (t.clone(), pair_obj(ut, v.apply_obj(t))))
            .collect();
        let on_mor = u
            .on_mor
            .iter()
            .map(|(m, um)| (m.clone(), pair_mor(um, v.apply_mor(m))))
            .collect();
        let w = EquivariantFunctor::new(u.dom.clone(), self.apex.clone(), on_obj, on_mor);
        w.validate().assert_ok("mediating map");
        w
    }
}

/// Pullback of a fibration `of` along an arbitrary map `along` into the same
/// codomain.
pub fn pullback(of: &EquivariantFunctor, along: &EquivariantFunctor) -> Result<PullbackSquare> {
    if of.cod != along.cod {
        return Err(Error::pre("pullback: codomains differ"));
    }
    if is_fibration(of).is_none() {
        return Err(Error::pre("pullback: `of` is not a fibration"));
    }
    let t_side = &along.dom;
    let e_side = &of.dom;

    let mut g = FiniteGroupoid::new();
    let mut invol_obj = BTreeMap::new();
    let mut invol_mor = BTreeMap::new();
    let mut p1_obj = BTreeMap::new();
    let mut p2_obj = BTreeMap::new();
    let mut p1_mor = BTreeMap::new();
    let mut p2_mor = BTreeMap::new();

    let mut objs = Vec::new();
    for t in t_side.carrier().objects() {
        for e in e_side.carrier().objects() {
            if along.apply_obj(t) != of.apply_obj(e) {
                continue;
            }
            let o = pair_obj(t, e);
            g.add_object(o.clone());
            invol_obj.insert(o.clone(), pair_obj(t_side.alpha_obj(t), e_side.alpha_obj(e)));
            p1_obj.insert(o.clone(), t.clone());
            p2_obj.insert(o.clone(), e.clone());
            objs.push((o, t.clone(), e.clone()));
        }
    }
    let mut mors = Vec::new();
    for (m, ma) in t_side.carrier().morphisms() {
        for (n, na) in e_side.carrier().morphisms() {
            if along.apply_mor(m) != of.apply_mor(n) {
                continue;
            }
            let id = pair_mor(m, n);
            g.add_morphism(id.clone(), pair_obj(&ma.src, &na.src), pair_obj(&ma.dst, &na.dst));
            invol_mor.insert(id.clone(), pair_mor(t_side.alpha_mor(m), e_side.alpha_mor(n)));
            p1_mor.insert(id.clone(), m.clone());
            p2_mor.insert(id.clone(), n.clone());
            mors.push((id, m.clone(), n.clone()));
        }
    }
    for (o, t, e) in &objs {
        g.set_identity(
            o.clone(),
            pair_mor(t_side.carrier().identity_of(t), e_side.carrier().identity_of(e)),
        );
    }
    for (id1, m1, n1) in &mors {
        for (id2, m2, n2) in &mors {
            if t_side.carrier().dst(m1) != t_side.carrier().src(m2)
                || e_side.carrier().dst(n1) != e_side.carrier().src(n2)
            {
                continue;
            }
            let cm = t_side.carrier().compose_of(m2, m1);
            let cn = e_side.carrier().compose_of(n2, n1);
            g.set_compose(id2.clone(), id1.clone(), pair_mor(cm, cn));
        }
    }
    for (id, m, n) in &mors {
        g.set_inverse_pair(
            id.clone(),
            pair_mor(t_side.carrier().inverse_of(m), e_side.carrier().inverse_of(n)),
        );
    }
    let apex = InvolutiveGroupoid::new(g, invol_obj, invol_mor);
    let proj1 = EquivariantFunctor::new(apex.clone(), t_side.clone(), p1_obj, p1_mor);
    let proj2 = EquivariantFunctor::new(apex.clone(), e_side.clone(), p2_obj, p2_mor);
    Ok(PullbackSquare {
        apex,
        proj1,
        proj2,
        along: along.clone(),
        of: of.clone(),
    })
}

/// Spot-check the universal property against a family of probe groupoids:
/// every commuting cone out of a probe must factor uniquely through the apex.
pub fn verify_pullback_universal_property(
    sq: &PullbackSquare,
    probes: &[InvolutiveGroupoid],
    budget: &Budget,
) -> Result<bool> {
    for p in probes {
        let legs_u = FunctorSearch::new(p.carrier(), sq.along.dom.carrier())
            .equivariant(p, &sq.along.dom)
            .node_cap(budget.node_cap)
            .enumerate(budget.section_cap)?;
        for asg_u in legs_u {
            let u = EquivariantFunctor::new(
                p.clone(),
                sq.along.dom.clone(),
                asg_u.on_obj,
                asg_u.on_mor,
            );
            let au = crate::gpd::compose_functors(&sq.along, &u);
            let legs_v = FunctorSearch::new(p.carrier(), sq.of.dom.carrier())
                .equivariant(p, &sq.of.dom)
                .node_cap(budget.node_cap)
                .obj_filter(|o, cand| sq.of.apply_obj(cand) == au.apply_obj(o))
                .mor_filter(|m, cand| sq.of.apply_mor(cand) == au.apply_mor(m))
                .enumerate(budget.section_cap)?;
            for asg_v in legs_v {
                let v = EquivariantFunctor::new(
                    p.clone(),
                    sq.of.dom.clone(),
                    asg_v.on_obj,
                    asg_v.on_mor,
                );
                let w = sq.mediating(&u, &v);
                if crate::gpd::compose_functors(&sq.proj1, &w) != u
                    || crate::gpd::compose_functors(&sq.proj2, &w) != v
                {
                    return Ok(false);
                }
                let count = FunctorSearch::new(p.carrier(), sq.apex.carrier())
                    .equivariant(p, &sq.apex)
                    .node_cap(budget.node_cap)
                    .obj_filter(|o, cand| sq.proj1.apply_obj(cand) == u.apply_obj(o))
                    .mor_filter(|m, cand| sq.proj1.apply_mor(cand) == u.apply_mor(m))
                    .obj_filter(|o, cand| sq.proj2.apply_obj(cand) == v.apply_obj(o))
                    .mor_filter(|m, cand| sq.proj2.apply_mor(cand) == v.apply_mor(m))
                    .count(8)?;
                if count != 1 {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Fibers and tubes.
// ---------------------------------------------------------------------------

/// The fiber of `g` over a base object: objects over it, morphisms over its
/// identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberGroupoid {
    pub base_object: ObjId,
    pub fiber: FiniteGroupoid,
}

pub fn fiber(g: &EquivariantFunctor, y: &ObjId) -> FiberGroupoid {
    let idy = g.cod.carrier().identity_of(y);
    let mut fib = FiniteGroupoid::new();
    let objs: BTreeSet<ObjId> = g
        .dom
        .carrier()
        .objects()
        .filter(|x| g.apply_obj(x) == y)
        .cloned()
        .collect();
    for x in &objs {
        fib.add_object(x.clone());
    }
    let keep: BTreeSet<MorId> = g
        .dom
        .carrier()
        .morphism_ids()
        .filter(|m| g.apply_mor(m) == idy)
        .cloned()
        .collect();
    for m in &keep {
        let a = g.dom.carrier().arrow(m).unwrap();
        fib.add_morphism(m.clone(), a.src.clone(), a.dst.clone());
    }
    for x in &objs {
        fib.set_identity(x.clone(), g.dom.carrier().identity_of(x).clone());
    }
    for ((m2, m1), c) in g.dom.carrier().compose_table() {
        if keep.contains(m2) && keep.contains(m1) {
            fib.set_compose(m2.clone(), m1.clone(), c.clone());
        }
    }
    for m in &keep {
        fib.set_inverse_pair(m.clone(), g.dom.carrier().inverse_of(m).clone());
    }
    FiberGroupoid {
        base_object: y.clone(),
        fiber: fib,
    }
}

/// Arrow of the walking isomorphism used by a tube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TubeArrow {
    Id0,
    Id1,
    Fwd,
    Bwd,
}

impl TubeArrow {
    fn endpoints(self) -> (u8, u8) {
        match self {
            TubeArrow::Id0 => (0, 0),
            TubeArrow::Id1 => (1, 1),
            TubeArrow::Fwd => (0, 1),
            TubeArrow::Bwd => (1, 0),
        }
    }

    fn compose(self, before: TubeArrow) -> Option<TubeArrow> {
        let (s2, d2) = self.endpoints();
        let (s1, d1) = before.endpoints();
        if d1 != s2 {
            return None;
        }
        Some(match (s1, d2) {
            (0, 0) => TubeArrow::Id0,
            (1, 1) => TubeArrow::Id1,
            (0, 1) => TubeArrow::Fwd,
            (1, 0) => TubeArrow::Bwd,
            _ => unreachable!(),
        })
    }

    fn tag(self) -> &'static str {
        match self {
            TubeArrow::Id0 => "e0",
            TubeArrow::Id1 => "e1",
            TubeArrow::Fwd => "f",
            TubeArrow::Bwd => "b",
        }
    }
}

pub fn tube_obj_id(x: &ObjId, end: u8) -> ObjId {
    ObjId::new(format!("({x}|{end})"))
}

pub fn tube_mor_id(h: &MorId, w: TubeArrow) -> MorId {
    MorId::new(format!("({h}|{})", w.tag()))
}

/// The pullback of `g` against the walking isomorphism placed on a base
/// morphism `u`: objects `(x|0)` over `src(u)` and `(x|1)` over `dst(u)`.
#[derive(Debug, Clone)]
pub struct Tube {
    pub u: MorId,
    pub groupoid: FiniteGroupoid,
    pub obj_rev: BTreeMap<ObjId, (ObjId, u8)>,
    pub mor_rev: BTreeMap<MorId, (MorId, TubeArrow)>,
}

pub fn tube(g: &EquivariantFunctor, u: &MorId) -> Tube {
    let b = g.cod.carrier();
    let a = g.dom.carrier();
    let (y0, y1) = (b.src(u).clone(), b.dst(u).clone());
    let u_inv = b.inverse_of(u).clone();
    let id0 = b.identity_of(&y0).clone();
    let id1 = b.identity_of(&y1).clone();
    let base_of = |w: TubeArrow| -> &MorId {
        match w {
            TubeArrow::Id0 => &id0,
            TubeArrow::Id1 => &id1,
            TubeArrow::Fwd => u,
            TubeArrow::Bwd => &u_inv,
        }
    };

    let mut t = FiniteGroupoid::new();
    let mut obj_rev = BTreeMap::new();
    let mut mor_rev = BTreeMap::new();
    for x in a.objects() {
        if g.apply_obj(x) == &y0 {
            let o = tube_obj_id(x, 0);
            t.add_object(o.clone());
            obj_rev.insert(o, (x.clone(), 0));
        }
        if g.apply_obj(x) == &y1 {
            let o = tube_obj_id(x, 1);
            t.add_object(o.clone());
            obj_rev.insert(o, (x.clone(), 1));
        }
    }
    let kinds = [TubeArrow::Id0, TubeArrow::Id1, TubeArrow::Fwd, TubeArrow::Bwd];
    let mut mors: Vec<(MorId, MorId, TubeArrow)> = Vec::new();
    for (h, ha) in a.morphisms() {
        for w in kinds {
            if g.apply_mor(h) != base_of(w) {
                continue;
            }
            let (s, d) = w.endpoints();
            let id = tube_mor_id(h, w);
            t.add_morphism(id.clone(), tube_obj_id(&ha.src, s), tube_obj_id(&ha.dst, d));
            mor_rev.insert(id.clone(), (h.clone(), w));
            mors.push((id, h.clone(), w));
        }
    }
    for (o, (x, end)) in &obj_rev {
        let w = if *end == 0 { TubeArrow::Id0 } else { TubeArrow::Id1 };
        t.set_identity(o.clone(), tube_mor_id(a.identity_of(x), w));
    }
    for (id1m, h1, w1) in &mors {
        for (id2m, h2, w2) in &mors {
            let Some(wc) = w2.compose(*w1) else { continue };
            if a.dst(h1) != a.src(h2) {
                continue;
            }
            let hc = a.compose_of(h2, h1);
            t.set_compose(id2m.clone(), id1m.clone(), tube_mor_id(hc, wc));
        }
    }
    for (id, h, w) in &mors {
        let wi = match w {
            TubeArrow::Id0 => TubeArrow::Id0,
            TubeArrow::Id1 => TubeArrow::Id1,
            TubeArrow::Fwd => TubeArrow::Bwd,
            TubeArrow::Bwd => TubeArrow::Fwd,
        };
        t.set_inverse_pair(id.clone(), tube_mor_id(a.inverse_of(h), wi));
    }
    Tube {
        u: u.clone(),
        groupoid: t,
        obj_rev,
        mor_rev,
    }
}

// ---------------------------------------------------------------------------
// Dependent products.
// ---------------------------------------------------------------------------

/// A partial section of `f` over one fiber of `g`, stored extensionally.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Section {
    pub on_obj: BTreeMap<ObjId, ObjId>,
    pub on_mor: BTreeMap<MorId, MorId>,
}

/// An object `(y, s)` of the dependent product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiObject {
    pub base: ObjId,
    pub section: Section,
}

/// The action of a dependent-product morphism on its tube, keyed by the
/// tube's object and morphism identifiers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct VTable {
    pub on_obj: BTreeMap<ObjId, ObjId>,
    pub on_mor: BTreeMap<MorId, MorId>,
}

/// A morphism `(u, v)` of the dependent product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiMorphism {
    pub base: MorId,
    pub v: VTable,
}

/// The dependent product `Π_g f` with its projection to the base and the
/// section data behind each object and morphism identifier.
#[derive(Debug, Clone)]
pub struct DependentProduct {
    pub projection: EquivariantFunctor,
    pub objects: BTreeMap<ObjId, PiObject>,
    pub morphisms: BTreeMap<MorId, PiMorphism>,
    object_index: BTreeMap<(ObjId, Section), ObjId>,
    morphism_index: BTreeMap<(MorId, VTable), MorId>,
}

impl DependentProduct {
    pub fn total(&self) -> &InvolutiveGroupoid {
        &self.projection.dom
    }

    pub fn object_id(&self, base: &ObjId, section: &Section) -> Option<&ObjId> {
        self.object_index.get(&(base.clone(), section.clone()))
    }

    pub fn morphism_id(&self, base: &MorId, v: &VTable) -> Option<&MorId> {
        self.morphism_index.get(&(base.clone(), v.clone()))
    }

    /// Objects fixed by the induced involution, with their sections.
    pub fn fixed_objects(&self) -> Vec<(&ObjId, &PiObject)> {
        self.total()
            .carrier()
            .objects()
            .filter(|o| self.total().is_fixed_obj(o))
            .map(|o| (o, &self.objects[o]))
            .collect()
    }
}

fn pi_obj_id(y: &ObjId, idx: usize) -> ObjId {
    ObjId::new(format!("({y}|s{idx})"))
}

fn pi_mor_id(u: &MorId, idx: usize) -> MorId {
    MorId::new(format!("({u}|v{idx})"))
}

/// Dependent product along `g` of a fibration `f` over `dom(g)`, with the
/// lexicographic cleavage of `g` breaking ties in the composition formula.
pub fn dependent_product(
    g: &EquivariantFunctor,
    f: &EquivariantFunctor,
    budget: &Budget,
) -> Result<DependentProduct> {
    let cleavage = is_fibration(g).ok_or_else(|| Error::pre("dependent product: g is not a fibration"))?;
    dependent_product_with(g, f, &cleavage, budget)
}

/// As [`dependent_product`], with a caller-supplied cleavage for `g`. The
/// output groupoid is identical for every valid cleavage.
pub fn dependent_product_with(
    g: &EquivariantFunctor,
    f: &EquivariantFunctor,
    cleavage: &Cleavage,
    budget: &Budget,
) -> Result<DependentProduct> {
    if is_fibration(f).is_none() {
        return Err(Error::pre("dependent product: f is not a fibration"));
    }
    if f.cod != g.dom {
        return Err(Error::pre("dependent product: f must be a fibration over dom(g)"));
    }
    let b = &g.cod;
    let c = &f.dom;
    let c_under = c.carrier();

    // Sections over each fiber, enumerated in lexicographic order.
    let ys: Vec<ObjId> = b.carrier().objects().cloned().collect();
    let section_results = exec::map_ordered(&ys, |y| -> Result<Vec<Section>> {
        let fib = fiber(g, y);
        let asgs = FunctorSearch::new(&fib.fiber, c_under)
            .node_cap(budget.node_cap)
            .obj_filter(|x, cand| f.apply_obj(cand) == x)
            .mor_filter(|m, cand| f.apply_mor(cand) == m)
            .enumerate(budget.section_cap)?;
        Ok(asgs
            .into_iter()
            .map(|a| Section {
                on_obj: a.on_obj,
                on_mor: a.on_mor,
            })
            .collect())
    });
    let mut sections: BTreeMap<ObjId, Vec<Section>> = BTreeMap::new();
    for (y, res) in ys.iter().zip(section_results) {
        sections.insert(y.clone(), res?);
    }

    // Tube functors over each base morphism.
    let us: Vec<MorId> = b.carrier().morphism_ids().cloned().collect();
    let tube_results = exec::map_ordered(&us, |u| -> Result<(Tube, Vec<VTable>)> {
        let tb = tube(g, u);
        let obj_rev = tb.obj_rev.clone();
        let mor_rev = tb.mor_rev.clone();
        let asgs = FunctorSearch::new(&tb.groupoid, c_under)
            .node_cap(budget.node_cap)
            .obj_filter(move |z, cand| f.apply_obj(cand) == &obj_rev[z].0)
            .mor_filter(move |m, cand| f.apply_mor(cand) == &mor_rev[m].0)
            .enumerate(budget.section_cap)?;
        let tables = asgs
            .into_iter()
            .map(|a| VTable {
                on_obj: a.on_obj,
                on_mor: a.on_mor,
            })
            .collect();
        Ok((tb, tables))
    });
    let mut tubes: BTreeMap<MorId, Tube> = BTreeMap::new();
    let mut vtables: BTreeMap<MorId, Vec<VTable>> = BTreeMap::new();
    for (u, res) in us.iter().zip(tube_results) {
        let (tb, tables) = res?;
        tubes.insert(u.clone(), tb);
        vtables.insert(u.clone(), tables);
    }

    // Identifier assignment and content indexes.
    let mut objects = BTreeMap::new();
    let mut object_index = BTreeMap::new();
    for (y, secs) in &sections {
        for (k, s) in secs.iter().enumerate() {
            let id = pi_obj_id(y, k);
            objects.insert(
                id.clone(),
                PiObject {
                    base: y.clone(),
                    section: s.clone(),
                },
            );
            object_index.insert((y.clone(), s.clone()), id);
        }
    }
    let mut morphisms = BTreeMap::new();
    let mut morphism_index = BTreeMap::new();
    for (u, tables) in &vtables {
        for (k, v) in tables.iter().enumerate() {
            let id = pi_mor_id(u, k);
            morphisms.insert(
                id.clone(),
                PiMorphism {
                    base: u.clone(),
                    v: v.clone(),
                },
            );
            morphism_index.insert((u.clone(), v.clone()), id);
        }
    }

    // Restriction of a tube table to one endpoint is a section of that fiber.
    let restrict = |u: &MorId, v: &VTable, end: u8| -> Section {
        let tb = &tubes[u];
        let mut on_obj = BTreeMap::new();
        for (z, (x, e)) in &tb.obj_rev {
            if *e == end {
                on_obj.insert(x.clone(), v.on_obj[z].clone());
            }
        }
        let want = if end == 0 { TubeArrow::Id0 } else { TubeArrow::Id1 };
        let mut on_mor = BTreeMap::new();
        for (zm, (h, w)) in &tb.mor_rev {
            if *w == want {
                on_mor.insert(h.clone(), v.on_mor[zm].clone());
            }
        }
        Section { on_obj, on_mor }
    };
    let lookup_obj = |y: &ObjId, s: &Section| -> ObjId {
        object_index
            .get(&(y.clone(), s.clone()))
            .unwrap_or_else(|| panic!("dependent product: endpoint section not enumerated over {y}"))
            .clone()
    };

    let mut total = FiniteGroupoid::new();
    for id in objects.keys() {
        total.add_object(id.clone());
    }
    let mut srcs: BTreeMap<MorId, ObjId> = BTreeMap::new();
    let mut dsts: BTreeMap<MorId, ObjId> = BTreeMap::new();
    for (id, pm) in &morphisms {
        let y0 = b.carrier().src(&pm.base);
        let y1 = b.carrier().dst(&pm.base);
        let s = lookup_obj(y0, &restrict(&pm.base, &pm.v, 0));
        let t = lookup_obj(y1, &restrict(&pm.base, &pm.v, 1));
        total.add_morphism(id.clone(), s.clone(), t.clone());
        srcs.insert(id.clone(), s);
        dsts.insert(id.clone(), t);
    }

    // Identity of (y, s): the constant tube table over 1_y.
    for (oid, po) in &objects {
        let idy = b.carrier().identity_of(&po.base).clone();
        let tb = &tubes[&idy];
        let mut on_obj = BTreeMap::new();
        for (z, (x, _)) in &tb.obj_rev {
            on_obj.insert(z.clone(), po.section.on_obj[x].clone());
        }
        let mut on_mor = BTreeMap::new();
        for (zm, (h, _)) in &tb.mor_rev {
            on_mor.insert(zm.clone(), po.section.on_mor[h].clone());
        }
        let v = VTable { on_obj, on_mor };
        let mid = morphism_index
            .get(&(idy, v))
            .unwrap_or_else(|| panic!("dependent product: identity table not enumerated at {oid}"))
            .clone();
        total.set_identity(oid.clone(), mid);
    }

    // Composition via one lift of the first factor's base morphism. The
    // composite table is rebuilt in full and looked up among the enumerated
    // tube functors, so a transcription slip cannot slide through.
    let mor_list: Vec<(MorId, PiMorphism)> =
        morphisms.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let composite_rows = exec::map_ordered(&mor_list, |(id1, pm1)| {
        let mut rows = Vec::new();
        for (id2, pm2) in &mor_list {
            if dsts[id1] != srcs[id2] {
                continue;
            }
            let u = &pm1.base;
            let u2 = &pm2.base;
            let uc = b.carrier().compose_of(u2, u).clone();
            let tb_c = &tubes[&uc];
            let mut on_obj = BTreeMap::new();
            for (z, (x, e)) in &tb_c.obj_rev {
                let val = if *e == 0 {
                    pm1.v.on_obj[&tube_obj_id(x, 0)].clone()
                } else {
                    pm2.v.on_obj[&tube_obj_id(x, 1)].clone()
                };
                on_obj.insert(z.clone(), val);
            }
            let mut on_mor = BTreeMap::new();
            let mut fwd_pending = Vec::new();
            for (zm, (h, w)) in &tb_c.mor_rev {
                match w {
                    TubeArrow::Id0 => {
                        on_mor.insert(zm.clone(), pm1.v.on_mor[&tube_mor_id(h, TubeArrow::Id0)].clone());
                    }
                    TubeArrow::Id1 => {
                        on_mor.insert(zm.clone(), pm2.v.on_mor[&tube_mor_id(h, TubeArrow::Id1)].clone());
                    }
                    TubeArrow::Fwd => fwd_pending.push((zm.clone(), h.clone())),
                    TubeArrow::Bwd => {}
                }
            }
            for (zm, h) in &fwd_pending {
                let x = g.dom.carrier().src(h);
                let lift = &cleavage.table[&(u.clone(), x.clone())];
                let lift_inv = g.dom.carrier().inverse_of(lift);
                let h_mid = g.dom.carrier().compose_of(h, lift_inv);
                let first = &pm1.v.on_mor[&tube_mor_id(lift, TubeArrow::Fwd)];
                let second = &pm2.v.on_mor[&tube_mor_id(h_mid, TubeArrow::Fwd)];
                on_mor.insert(zm.clone(), c_under.compose_of(second, first).clone());
            }
            for (zm, (h, w)) in &tb_c.mor_rev {
                if *w == TubeArrow::Bwd {
                    let h_inv = g.dom.carrier().inverse_of(h);
                    let fwd_val = &on_mor[&tube_mor_id(h_inv, TubeArrow::Fwd)];
                    on_mor.insert(zm.clone(), c_under.inverse_of(fwd_val).clone());
                }
            }
            let vt = VTable { on_obj, on_mor };
            let cid = morphism_index
                .get(&(uc.clone(), vt))
                .unwrap_or_else(|| {
                    panic!("dependent product: composite of {id2} after {id1} is not a tube functor")
                })
                .clone();
            rows.push((id2.clone(), id1.clone(), cid));
        }
        rows
    });
    for rows in composite_rows {
        for (m2, m1, c_id) in rows {
            total.set_compose(m2, m1, c_id);
        }
    }

    // Inverses swap the tube's endpoints.
    for (id, pm) in &morphisms {
        let u_inv = b.carrier().inverse_of(&pm.base).clone();
        let tb_i = &tubes[&u_inv];
        let mut on_obj = BTreeMap::new();
        for (z, (x, e)) in &tb_i.obj_rev {
            on_obj.insert(z.clone(), pm.v.on_obj[&tube_obj_id(x, 1 - *e)].clone());
        }
        let mut on_mor = BTreeMap::new();
        for (zm, (h, w)) in &tb_i.mor_rev {
            let flipped = match w {
                TubeArrow::Id0 => TubeArrow::Id1,
                TubeArrow::Id1 => TubeArrow::Id0,
                TubeArrow::Fwd => TubeArrow::Bwd,
                TubeArrow::Bwd => TubeArrow::Fwd,
            };
            on_mor.insert(zm.clone(), pm.v.on_mor[&tube_mor_id(h, flipped)].clone());
        }
        let vt = VTable { on_obj, on_mor };
        let iid = morphism_index
            .get(&(u_inv, vt))
            .unwrap_or_else(|| panic!("dependent product: inverse of {id} is not a tube functor"))
            .clone();
        total.set_inverse_pair(id.clone(), iid);
    }

    // Induced involution: conjugate the section data by both involutions.
    let mut invol_obj = BTreeMap::new();
    for (oid, po) in &objects {
        let by = b.alpha_obj(&po.base).clone();
        let mut on_obj = BTreeMap::new();
        for x in fiber(g, &by).fiber.object_set() {
            on_obj.insert(x.clone(), c.alpha_obj(&po.section.on_obj[g.dom.alpha_obj(x)]).clone());
        }
        let mut on_mor = BTreeMap::new();
        for h in fiber(g, &by).fiber.morphism_ids() {
            on_mor.insert(h.clone(), c.alpha_mor(&po.section.on_mor[g.dom.alpha_mor(h)]).clone());
        }
        let s = Section { on_obj, on_mor };
        invol_obj.insert(oid.clone(), lookup_obj(&by, &s));
    }
    let mut invol_mor = BTreeMap::new();
    for (mid, pm) in &morphisms {
        let bu = b.alpha_mor(&pm.base).clone();
        let tb_b = &tubes[&bu];
        let mut on_obj = BTreeMap::new();
        for (z, (x, e)) in &tb_b.obj_rev {
            on_obj.insert(
                z.clone(),
                c.alpha_obj(&pm.v.on_obj[&tube_obj_id(g.dom.alpha_obj(x), *e)]).clone(),
            );
        }
        let mut on_mor = BTreeMap::new();
        for (zm, (h, w)) in &tb_b.mor_rev {
            on_mor.insert(
                zm.clone(),
                c.alpha_mor(&pm.v.on_mor[&tube_mor_id(g.dom.alpha_mor(h), *w)]).clone(),
            );
        }
        let vt = VTable { on_obj, on_mor };
        let iid = morphism_index
            .get(&(bu, vt))
            .unwrap_or_else(|| panic!("dependent product: involution image of {mid} missing"))
            .clone();
        invol_mor.insert(mid.clone(), iid);
    }

    let pi = InvolutiveGroupoid::new(total, invol_obj, invol_mor);
    pi.validate().assert_ok("dependent product groupoid");

    let proj_obj = objects.iter().map(|(id, po)| (id.clone(), po.base.clone())).collect();
    let proj_mor = morphisms.iter().map(|(id, pm)| (id.clone(), pm.base.clone())).collect();
    let projection = EquivariantFunctor::new(pi, b.clone(), proj_obj, proj_mor);
    projection.validate().assert_ok("dependent product projection");
    assert!(
        is_fibration(&projection).is_some(),
        "dependent product projection must be a fibration"
    );

    Ok(DependentProduct {
        projection,
        objects,
        morphisms,
        object_index,
        morphism_index,
    })
}

// ---------------------------------------------------------------------------
// Adjunction transposes.
// ---------------------------------------------------------------------------

/// Forward transpose: a slice map `v: g*h -> f` over `dom(g)` becomes a slice
/// map `h -> Π_g f` over the base. `v` must be a map out of the apex produced
/// by [`pullback`]`(g, h)`.
pub fn transpose_forward(
    g: &EquivariantFunctor,
    h: &EquivariantFunctor,
    v: &EquivariantFunctor,
    pi: &DependentProduct,
) -> EquivariantFunctor {
    let d = &h.dom;
    let section_at = |x: &ObjId| -> Section {
        let hx = h.apply_obj(x);
        let fib = fiber(g, hx);
        let idx = d.carrier().identity_of(x);
        let on_obj = fib
            .fiber
            .object_set()
            .iter()
            .map(|z| (z.clone(), v.apply_obj(&pair_obj(x, z)).clone()))
            .collect();
        let on_mor = fib
            .fiber
            .morphism_ids()
            .map(|t| (t.clone(), v.apply_mor(&pair_mor(idx, t)).clone()))
            .collect();
        Section { on_obj, on_mor }
    };
    let on_obj: BTreeMap<ObjId, ObjId> = d
        .carrier()
        .objects()
        .map(|x| {
            let s = section_at(x);
            let id = pi
                .object_id(h.apply_obj(x), &s)
                .expect("transpose: section not present in the dependent product")
                .clone();
            (x.clone(), id)
        })
        .collect();
    let on_mor: BTreeMap<MorId, MorId> = d
        .carrier()
        .morphisms()
        .map(|(u, ua)| {
            let hu = h.apply_mor(u);
            let tb = tube(g, hu);
            let s0 = section_at(&ua.src);
            let s1 = section_at(&ua.dst);
            let mut t_obj = BTreeMap::new();
            for (z, (x, e)) in &tb.obj_rev {
                let val = if *e == 0 { &s0.on_obj[x] } else { &s1.on_obj[x] };
                t_obj.insert(z.clone(), val.clone());
            }
            let u_inv = d.carrier().inverse_of(u);
            let mut t_mor = BTreeMap::new();
            for (zm, (t, w)) in &tb.mor_rev {
                let val = match w {
                    TubeArrow::Id0 => s0.on_mor[t].clone(),
                    TubeArrow::Id1 => s1.on_mor[t].clone(),
                    TubeArrow::Fwd => v.apply_mor(&pair_mor(u, t)).clone(),
                    TubeArrow::Bwd => v.apply_mor(&pair_mor(u_inv, t)).clone(),
                };
                t_mor.insert(zm.clone(), val);
            }
            let vt = VTable {
                on_obj: t_obj,
                on_mor: t_mor,
            };
            let id = pi
                .morphism_id(hu, &vt)
                .expect("transpose: tube table not present in the dependent product")
                .clone();
            (u.clone(), id)
        })
        .collect();
    let out = EquivariantFunctor::new(d.clone(), pi.total().clone(), on_obj, on_mor);
    out.validate().assert_ok("forward transpose");
    out
}

/// Backward transpose: a slice map `k: h -> Π_g f` over the base becomes a
/// slice map `g*h -> f` over `dom(g)`, written on the apex of
/// [`pullback`]`(g, h)`.
pub fn transpose_backward(
    g: &EquivariantFunctor,
    f: &EquivariantFunctor,
    h: &EquivariantFunctor,
    k: &EquivariantFunctor,
    pi: &DependentProduct,
) -> Result<EquivariantFunctor> {
    let sq = pullback(g, h)?;
    let on_obj: BTreeMap<ObjId, ObjId> = sq
        .apex
        .carrier()
        .objects()
        .map(|o| {
            let x = sq.proj1.apply_obj(o);
            let z = sq.proj2.apply_obj(o);
            let po = &pi.objects[k.apply_obj(x)];
            (o.clone(), po.section.on_obj[z].clone())
        })
        .collect();
    let on_mor: BTreeMap<MorId, MorId> = sq
        .apex
        .carrier()
        .morphism_ids()
        .map(|m| {
            let u = sq.proj1.apply_mor(m);
            let t = sq.proj2.apply_mor(m);
            let pm = &pi.morphisms[k.apply_mor(u)];
            (m.clone(), pm.v.on_mor[&tube_mor_id(t, TubeArrow::Fwd)].clone())
        })
        .collect();
    let out = EquivariantFunctor::new(sq.apex.clone(), f.dom.clone(), on_obj, on_mor);
    out.validate().assert_ok("backward transpose");
    Ok(out)
}

/// All equivariant maps `from.dom -> to.dom` commuting over the shared base.
pub fn slice_homs(
    from: &EquivariantFunctor,
    to: &EquivariantFunctor,
    budget: &Budget,
) -> Result<Vec<EquivariantFunctor>> {
    if from.cod != to.cod {
        return Err(Error::pre("slice_homs: different bases"));
    }
    let asgs = FunctorSearch::new(from.dom.carrier(), to.dom.carrier())
        .equivariant(&from.dom, &to.dom)
        .node_cap(budget.node_cap)
        .obj_filter(|o, cand| to.apply_obj(cand) == from.apply_obj(o))
        .mor_filter(|m, cand| to.apply_mor(cand) == from.apply_mor(m))
        .enumerate(budget.section_cap)?;
    Ok(asgs
        .into_iter()
        .map(|a| EquivariantFunctor::new(from.dom.clone(), to.dom.clone(), a.on_obj, a.on_mor))
        .collect())
}

/// Diagonal `Δ_f: A -> A×_C A` into the chosen pullback of `f` against
/// itself.
pub fn diagonal(f: &EquivariantFunctor) -> Result<(PullbackSquare, EquivariantFunctor)> {
    let sq = pullback(f, f)?;
    let id = EquivariantFunctor::identity(&f.dom);
    let delta = sq.mediating(&id, &id);
    Ok((sq, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpd::{
        compose_functors, free_double, free_double_functor, stock, terminal_map,
        trivial_involution,
    };
    use crate::search::find_isomorphism;

    fn s_one() -> InvolutiveGroupoid {
        free_double(&stock::unit())
    }

    fn s_interval() -> InvolutiveGroupoid {
        free_double(&stock::interval())
    }

    fn funext_g() -> EquivariantFunctor {
        terminal_map(&s_one())
    }

    fn funext_f() -> EquivariantFunctor {
        let i = stock::interval();
        let on_obj = i.objects().map(|o| (o.clone(), ObjId::new("0"))).collect();
        let on_mor = i
            .morphism_ids()
            .map(|m| (m.clone(), MorId::new("1_0")))
            .collect();
        free_double_functor(&i, &stock::unit(), &on_obj, &on_mor)
    }

    #[test]
    fn pullback_along_identity_recovers_the_domain() {
        let f = funext_f();
        let sq = pullback(&f, &EquivariantFunctor::identity(&f.cod)).unwrap();
        let iso = find_isomorphism(&sq.apex, &f.dom, &Budget::default()).unwrap();
        assert!(iso.is_some());
    }

    #[test]
    fn pullback_over_the_point_is_a_product() {
        let g = funext_g();
        let one = g.cod.clone();
        let sq = pullback(&g, &EquivariantFunctor::identity(&one)).unwrap();
        assert_eq!(sq.apex.carrier().object_count(), 2);
        let iso = find_isomorphism(&sq.apex, &s_one(), &Budget::default()).unwrap();
        assert!(iso.is_some());
    }

    #[test]
    fn pullback_universal_property_on_probes() {
        let g = funext_g();
        let f = funext_f();
        let probes = [
            trivial_involution(stock::unit()),
            s_one(),
            trivial_involution(stock::interval()),
        ];
        let sq = pullback(&g, &g).unwrap();
        assert!(verify_pullback_universal_property(&sq, &probes, &Budget::default()).unwrap());
        let sq2 = pullback(&f, &f).unwrap();
        assert!(verify_pullback_universal_property(&sq2, &probes, &Budget::default()).unwrap());
    }

    #[test]
    fn tube_over_the_point_identity_has_four_objects() {
        let g = funext_g();
        let t = tube(&g, &MorId::new("1_0"));
        assert_eq!(t.groupoid.object_count(), 4);
        assert_eq!(t.groupoid.morphism_count(), 8);
        assert_eq!(t.groupoid.connected_components().len(), 2);
        t.groupoid.validate().assert_ok("tube");
    }

    #[test]
    fn tube_of_identity_base_connects_the_two_endpoints() {
        let si = s_interval();
        let idf = EquivariantFunctor::identity(&si);
        let t = tube(&idf, &MorId::new("phi"));
        assert_eq!(t.groupoid.object_count(), 2);
        assert_eq!(t.groupoid.morphism_count(), 4);
        t.groupoid.validate().assert_ok("tube of identity");
    }

    #[test]
    fn tube_over_empty_fiber_is_empty() {
        let s1 = s_one();
        let empty = trivial_involution(stock::empty());
        let f = EquivariantFunctor::new(empty, s1, BTreeMap::new(), BTreeMap::new());
        let t = tube(&f, &MorId::new("1_0"));
        assert_eq!(t.groupoid.object_count(), 0);
    }

    #[test]
    fn dependent_product_of_the_counterexample_instance() {
        let budget = Budget::default();
        let pi = dependent_product(&funext_g(), &funext_f(), &budget).unwrap();
        assert_eq!(pi.total().carrier().object_count(), 4);
        assert_eq!(pi.total().carrier().morphism_count(), 16);
        let fixed = pi.fixed_objects();
        assert_eq!(fixed.len(), 2);
        // The two fixed sections are the two strict diagonal assignments.
        let maps: Vec<BTreeMap<ObjId, ObjId>> = fixed
            .iter()
            .map(|(_, po)| po.section.on_obj.clone())
            .collect();
        let s1: BTreeMap<ObjId, ObjId> = [("0", "0"), ("0'", "0'")]
            .into_iter()
            .map(|(a, b)| (ObjId::new(a), ObjId::new(b)))
            .collect();
        let s2: BTreeMap<ObjId, ObjId> = [("0", "1"), ("0'", "1'")]
            .into_iter()
            .map(|(a, b)| (ObjId::new(a), ObjId::new(b)))
            .collect();
        assert!(maps.contains(&s1));
        assert!(maps.contains(&s2));
    }

    #[test]
    fn dependent_product_of_identity_fibration_has_singleton_fibers() {
        let budget = Budget::default();
        let g = funext_g();
        let f = EquivariantFunctor::identity(&g.dom);
        let pi = dependent_product(&g, &f, &budget).unwrap();
        assert_eq!(pi.total().carrier().object_count(), 1);
    }

    #[test]
    fn dependent_product_along_identity_recovers_the_fibration() {
        let budget = Budget::default();
        let f = funext_f();
        let g = EquivariantFunctor::identity(&f.cod);
        let pi = dependent_product(&g, &f, &budget).unwrap();
        assert_eq!(
            pi.total().carrier().object_count(),
            f.dom.carrier().object_count()
        );
        // Isomorphic over the base: search for an equivariant iso commuting
        // with the projections.
        let found = FunctorSearch::new(pi.total().carrier(), f.dom.carrier())
            .equivariant(pi.total(), &f.dom)
            .bijective()
            .obj_filter(|o, cand| f.apply_obj(cand) == pi.projection.apply_obj(o))
            .mor_filter(|m, cand| f.apply_mor(cand) == pi.projection.apply_mor(m))
            .find_first()
            .unwrap();
        assert!(found.is_some());
    }

    #[test]
    fn transposes_are_mutually_inverse_bijections() {
        let budget = Budget::default();
        let g = funext_g();
        let f = funext_f();
        let pi = dependent_product(&g, &f, &budget).unwrap();
        // h: S(1) -> 1 over the base point.
        let h = terminal_map(&s_one());
        let sq = pullback(&g, &h).unwrap();
        let proj_a = sq.proj2.clone();
        let fwd_side = slice_homs(&proj_a, &f, &budget).unwrap();
        let back_side = slice_homs(&h, &pi.projection, &budget).unwrap();
        assert_eq!(fwd_side.len(), back_side.len());
        assert!(!fwd_side.is_empty());
        for v in &fwd_side {
            let k = transpose_forward(&g, &h, v, &pi);
            let v2 = transpose_backward(&g, &f, &h, &k, &pi).unwrap();
            assert_eq!(v, &v2);
        }
        for k in &back_side {
            let v = transpose_backward(&g, &f, &h, k, &pi).unwrap();
            let k2 = transpose_forward(&g, &h, &v, &pi);
            assert_eq!(k, &k2);
        }
    }

    #[test]
    fn singleton_homsets_for_trivial_instances() {
        let budget = Budget::default();
        let b = trivial_involution(stock::unit());
        let g = EquivariantFunctor::identity(&b);
        let f = EquivariantFunctor::identity(&b);
        let h = EquivariantFunctor::identity(&b);
        let pi = dependent_product(&g, &f, &budget).unwrap();
        let sq = pullback(&g, &h).unwrap();
        assert_eq!(slice_homs(&sq.proj2, &f, &budget).unwrap().len(), 1);
        assert_eq!(slice_homs(&h, &pi.projection, &budget).unwrap().len(), 1);
    }

    #[test]
    fn diagonal_of_the_swap_fibration() {
        let g = funext_g();
        let (sq, delta) = diagonal(&g).unwrap();
        assert_eq!(sq.apex.carrier().object_count(), 4);
        assert_eq!(delta.object_image().len(), 2);
        assert_eq!(
            compose_functors(&sq.proj1, &delta),
            EquivariantFunctor::identity(&g.dom)
        );
        assert_eq!(
            compose_functors(&sq.proj2, &delta),
            EquivariantFunctor::identity(&g.dom)
        );
        // Diagonal of a discrete fibration is discrete with tiny fibers.
        assert!(crate::model::is_discrete_fibration(&g).is_some());
        assert!(crate::model::is_discrete_fibration(&delta).is_some());
    }

    #[test]
    fn lift_independence_of_the_composition_rule() {
        let budget = Budget::default();
        let g = funext_g();
        let f = funext_f();
        let lex = crate::model::is_fibration_with(&g, crate::model::TieBreak::Lex).unwrap();
        let rev = crate::model::is_fibration_with(&g, crate::model::TieBreak::ReverseLex).unwrap();
        let pi1 = dependent_product_with(&g, &f, &lex, &budget).unwrap();
        let pi2 = dependent_product_with(&g, &f, &rev, &budget).unwrap();
        assert_eq!(pi1.total(), pi2.total());
        assert_eq!(pi1.projection, pi2.projection);
    }
}
