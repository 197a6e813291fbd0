//! Backtracking search for functors subject to pointwise constraints.
//!
//! One engine serves every exhaustive question in the crate: diagonal
//! fillers, equivariant isomorphisms, right homotopies, slice hom-set
//! enumeration, and partial-section enumeration. Candidates are always tried
//! in identifier order, so `find_first` and `enumerate` are deterministic and
//! enumeration output is sorted lexicographically by assignment content.

use std::collections::{BTreeMap, BTreeSet};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::gpd::{FiniteGroupoid, InvolutiveGroupoid, MorId, ObjId};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Assignment {
    pub on_obj: BTreeMap<ObjId, ObjId>,
    pub on_mor: BTreeMap<MorId, MorId>,
}

type ObjFilter<'a> = Box<dyn Fn(&ObjId, &ObjId) -> bool + 'a>;
type MorFilter<'a> = Box<dyn Fn(&MorId, &MorId) -> bool + 'a>;

pub(crate) struct FunctorSearch<'a> {
    dom: &'a FiniteGroupoid,
    cod: &'a FiniteGroupoid,
    invol: Option<(&'a InvolutiveGroupoid, &'a InvolutiveGroupoid)>,
    obj_fixed: BTreeMap<ObjId, ObjId>,
    mor_fixed: BTreeMap<MorId, MorId>,
    obj_filters: Vec<ObjFilter<'a>>,
    mor_filters: Vec<MorFilter<'a>>,
    bijective: bool,
    unsat: bool,
    node_cap: usize,
}

impl<'a> FunctorSearch<'a> {
    pub(crate) fn new(dom: &'a FiniteGroupoid, cod: &'a FiniteGroupoid) -> Self {
        FunctorSearch {
            dom,
            cod,
            invol: None,
            obj_fixed: BTreeMap::new(),
            mor_fixed: BTreeMap::new(),
            obj_filters: Vec::new(),
            mor_filters: Vec::new(),
            bijective: false,
            unsat: false,
            node_cap: Budget::default().node_cap,
        }
    }

    /// Demand equivariance with respect to the given involutions.
    pub(crate) fn equivariant(mut self, dom: &'a InvolutiveGroupoid, cod: &'a InvolutiveGroupoid) -> Self {
        self.invol = Some((dom, cod));
        self
    }

    /// Force `F(o) = v`. Conflicting prescriptions make the search empty.
    pub(crate) fn fix_obj(mut self, o: ObjId, v: ObjId) -> Self {
        if let Some(old) = self.obj_fixed.get(&o) {
            if old != &v {
                self.unsat = true;
            }
        }
        self.obj_fixed.insert(o, v);
        self
    }

    pub(crate) fn fix_mor(mut self, m: MorId, v: MorId) -> Self {
        if let Some(old) = self.mor_fixed.get(&m) {
            if old != &v {
                self.unsat = true;
            }
        }
        self.mor_fixed.insert(m, v);
        self
    }

    pub(crate) fn obj_filter(mut self, f: impl Fn(&ObjId, &ObjId) -> bool + 'a) -> Self {
        self.obj_filters.push(Box::new(f));
        self
    }

    pub(crate) fn mor_filter(mut self, f: impl Fn(&MorId, &MorId) -> bool + 'a) -> Self {
        self.mor_filters.push(Box::new(f));
        self
    }

    /// Search for isomorphisms only.
    pub(crate) fn bijective(mut self) -> Self {
        self.bijective = true;
        self
    }

    pub(crate) fn node_cap(mut self, cap: usize) -> Self {
        self.node_cap = cap;
        self
    }

    pub(crate) fn find_first(self) -> Result<Option<Assignment>> {
        let mut out = Vec::new();
        self.run(Some(1), &mut out)?;
        Ok(out.pop())
    }

    /// Enumerate all solutions, erroring out if more than `max` exist.
    pub(crate) fn enumerate(self, max: usize) -> Result<Vec<Assignment>> {
        let mut out = Vec::new();
        self.run(Some(max + 1), &mut out)?;
        if out.len() > max {
            return Err(Error::budget("solution enumeration", out.len(), max));
        }
        Ok(out)
    }

    pub(crate) fn count(self, max: usize) -> Result<usize> {
        Ok(self.enumerate(max)?.len())
    }

    fn run(self, limit: Option<usize>, out: &mut Vec<Assignment>) -> Result<()> {
        if self.unsat {
            return Ok(());
        }
        if self.bijective
            && (self.dom.object_count() != self.cod.object_count()
                || self.dom.morphism_count() != self.cod.morphism_count())
        {
            return Ok(());
        }
        let objs: Vec<ObjId> = self.dom.objects().cloned().collect();
        let mors: Vec<MorId> = self.dom.morphism_ids().cloned().collect();
        // Triples (a, b, a∘b) touching each morphism, for incremental checks.
        let mut triples: BTreeMap<MorId, Vec<(MorId, MorId, MorId)>> = BTreeMap::new();
        for ((m2, m1), c) in self.dom.compose_table() {
            let t = (m2.clone(), m1.clone(), c.clone());
            for key in [m2, m1, c] {
                let entry = triples.entry(key.clone()).or_default();
                if !entry.contains(&t) {
                    entry.push(t.clone());
                }
            }
        }
        let mut state = State {
            search: &self,
            objs,
            mors,
            triples,
            on_obj: BTreeMap::new(),
            on_mor: BTreeMap::new(),
            used_obj: BTreeSet::new(),
            used_mor: BTreeSet::new(),
            nodes: 0,
            limit,
        };
        state.assign_obj(0, out)
    }
}

struct State<'s, 'a> {
    search: &'s FunctorSearch<'a>,
    objs: Vec<ObjId>,
    mors: Vec<MorId>,
    triples: BTreeMap<MorId, Vec<(MorId, MorId, MorId)>>,
    on_obj: BTreeMap<ObjId, ObjId>,
    on_mor: BTreeMap<MorId, MorId>,
    used_obj: BTreeSet<ObjId>,
    used_mor: BTreeSet<MorId>,
    nodes: usize,
    limit: Option<usize>,
}

impl State<'_, '_> {
    fn bump(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.search.node_cap {
            return Err(Error::budget("functor search nodes", self.nodes, self.search.node_cap));
        }
        Ok(())
    }

    fn done(&self, out: &[Assignment]) -> bool {
        self.limit.map(|l| out.len() >= l).unwrap_or(false)
    }

    fn assign_obj(&mut self, idx: usize, out: &mut Vec<Assignment>) -> Result<()> {
        if idx == self.objs.len() {
            return self.assign_mor(0, out);
        }
        let o = self.objs[idx].clone();
        let candidates: Vec<ObjId> = match self.search.obj_fixed.get(&o) {
            Some(v) => vec![v.clone()],
            None => self.search.cod.objects().cloned().collect(),
        };
        for cand in candidates {
            if self.done(out) {
                return Ok(());
            }
            self.bump()?;
            if !self.search.cod.has_object(&cand) {
                continue;
            }
            if self.search.bijective && self.used_obj.contains(&cand) {
                continue;
            }
            if !self.search.obj_filters.iter().all(|f| f(&o, &cand)) {
                continue;
            }
            if let Some((di, ci)) = self.search.invol {
                let ao = di.alpha_obj(&o);
                if let Some(assigned) = self.on_obj.get(ao) {
                    if assigned != ci.alpha_obj(&cand) {
                        continue;
                    }
                }
            }
            self.on_obj.insert(o.clone(), cand.clone());
            self.used_obj.insert(cand.clone());
            self.assign_obj(idx + 1, out)?;
            self.on_obj.remove(&o);
            self.used_obj.remove(&cand);
        }
        Ok(())
    }

    fn mor_candidates(&self, m: &MorId) -> Vec<MorId> {
        if let Some(v) = self.search.mor_fixed.get(m) {
            return vec![v.clone()];
        }
        let a = match self.search.dom.arrow(m) {
            Some(a) => a,
            None => return Vec::new(),
        };
        let (fs, fd) = (&self.on_obj[&a.src], &self.on_obj[&a.dst]);
        self.search.cod.hom(fs, fd).into_iter().cloned().collect()
    }

    fn consistent(&self, m: &MorId, cand: &MorId) -> bool {
        let dom = self.search.dom;
        let cod = self.search.cod;
        // Identities map to identities.
        if let Some(a) = dom.arrow(m) {
            if dom.get_identity(&a.src) == Some(m) && cod.get_identity(&self.on_obj[&a.src]) != Some(cand)
            {
                return false;
            }
        }
        // Inverses.
        if let Some(mi) = dom.get_inverse(m) {
            if let Some(fmi) = self.on_mor.get(mi) {
                if cod.get_inverse(cand) != Some(fmi) {
                    return false;
                }
            }
        }
        // Equivariance.
        if let Some((di, ci)) = self.search.invol {
            if let Some(fam) = self.on_mor.get(di.alpha_mor(m)) {
                if fam != ci.alpha_mor(cand) {
                    return false;
                }
            }
        }
        // Composition triples with all three morphisms decided.
        if let Some(ts) = self.triples.get(m) {
            for (m2, m1, c) in ts {
                let get = |k: &MorId| {
                    if k == m {
                        Some(cand)
                    } else {
                        self.on_mor.get(k)
                    }
                };
                if let (Some(f2), Some(f1), Some(fc)) = (get(m2), get(m1), get(c)) {
                    if cod.compose(f2, f1) != Some(fc) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn assign_mor(&mut self, idx: usize, out: &mut Vec<Assignment>) -> Result<()> {
        if idx == self.mors.len() {
            out.push(Assignment {
                on_obj: self.on_obj.clone(),
                on_mor: self.on_mor.clone(),
            });
            return Ok(());
        }
        let m = self.mors[idx].clone();
        for cand in self.mor_candidates(&m) {
            if self.done(out) {
                return Ok(());
            }
            self.bump()?;
            if self.search.bijective && self.used_mor.contains(&cand) {
                continue;
            }
            if !self.search.mor_filters.iter().all(|f| f(&m, &cand)) {
                continue;
            }
            if !self.consistent(&m, &cand) {
                continue;
            }
            self.on_mor.insert(m.clone(), cand.clone());
            self.used_mor.insert(cand.clone());
            self.assign_mor(idx + 1, out)?;
            self.on_mor.remove(&m);
            self.used_mor.remove(&cand);
        }
        Ok(())
    }
}

/// First equivariant isomorphism between two involutive groupoids, if any.
pub fn find_isomorphism(
    a: &InvolutiveGroupoid,
    b: &InvolutiveGroupoid,
    budget: &Budget,
) -> Result<Option<crate::gpd::EquivariantFunctor>> {
    let found = FunctorSearch::new(a.carrier(), b.carrier())
        .equivariant(a, b)
        .bijective()
        .node_cap(budget.node_cap)
        .find_first()?;
    Ok(found.map(|asg| crate::gpd::EquivariantFunctor::new(a.clone(), b.clone(), asg.on_obj, asg.on_mor)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpd::{free_double, stock, trivial_involution};

    #[test]
    fn counts_endomorphisms_of_the_interval() {
        let i = stock::interval();
        // Functors I -> I: any pair of objects is connected, so one functor
        // per object pair: 4 total.
        let n = FunctorSearch::new(&i, &i).count(100).unwrap();
        assert_eq!(n, 4);
    }

    #[test]
    fn equivariance_cuts_down_maps() {
        let s1 = free_double(&stock::unit());
        // Plain functors S(1) -> S(1): 4. Equivariant ones: identity and swap.
        let plain = FunctorSearch::new(s1.carrier(), s1.carrier()).count(100).unwrap();
        assert_eq!(plain, 4);
        let equiv = FunctorSearch::new(s1.carrier(), s1.carrier())
            .equivariant(&s1, &s1)
            .count(100)
            .unwrap();
        assert_eq!(equiv, 2);
    }

    #[test]
    fn iso_search_finds_self_isomorphisms() {
        let b = trivial_involution(stock::b_cyclic(3));
        let iso = find_isomorphism(&b, &b, &Budget::default()).unwrap();
        assert!(iso.is_some());
        iso.unwrap().validate().assert_ok("automorphism of B(Z3)");
        // No isomorphism onto a differently sized groupoid.
        let u = trivial_involution(stock::unit());
        assert!(find_isomorphism(&b, &u, &Budget::default()).unwrap().is_none());
    }

    #[test]
    fn node_cap_is_enforced() {
        let g = stock::torsor(&["p", "q", "r"], 3);
        let res = FunctorSearch::new(&g, &g).node_cap(5).count(1_000_000);
        assert!(matches!(res, Err(Error::BudgetExceeded { .. })));
    }
}
