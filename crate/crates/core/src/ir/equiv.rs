//! Structural equivalence of modules up to value and block renaming.

use std::collections::HashMap;

use super::module::{BlockId, Index, Module, OpId, ValueId};

struct Matcher<'a> {
    a: &'a Module,
    b: &'a Module,
    values: HashMap<ValueId, ValueId>,
    blocks: HashMap<BlockId, BlockId>,
}

/// Returns `Ok(())` when the two modules are isomorphic: same op sequence,
/// names, attributes, types and def-use structure. Otherwise describes the
/// first difference found.
pub fn isomorphic(a: &Module, b: &Module) -> Result<(), String> {
    let (ta, tb) = (a.top_ops(), b.top_ops());
    if ta.len() != tb.len() {
        return Err(format!("module has {} top-level ops vs {}", ta.len(), tb.len()));
    }
    let mut m = Matcher { a, b, values: HashMap::new(), blocks: HashMap::new() };
    let pairs: Vec<(OpId, OpId)> = ta.iter().copied().zip(tb.iter().copied()).collect();
    for &(x, y) in &pairs {
        m.defs(x, y)?;
    }
    for &(x, y) in &pairs {
        m.uses(x, y)?;
    }
    Ok(())
}

/// Isomorphism of two single ops (typically symbol definitions) in possibly
/// different modules.
pub fn ops_isomorphic(a: &Module, x: OpId, b: &Module, y: OpId) -> Result<(), String> {
    let mut m = Matcher { a, b, values: HashMap::new(), blocks: HashMap::new() };
    m.defs(x, y)?;
    m.uses(x, y)
}

impl<'a> Matcher<'a> {
    fn defs(&mut self, x: OpId, y: OpId) -> Result<(), String> {
        let (da, db) = (self.a.op(x), self.b.op(y));
        if da.name != db.name {
            return Err(format!("op `{}` vs `{}`", da.name, db.name));
        }
        if da.attrs != db.attrs {
            return Err(format!("attributes of `{}` differ: {:?} vs {:?}", da.name, da.attrs, db.attrs));
        }
        if da.results.len() != db.results.len() {
            return Err(format!("`{}` result count {} vs {}", da.name, da.results.len(), db.results.len()));
        }
        for (&ra, &rb) in da.results.iter().zip(&db.results) {
            self.pair_value(ra, rb)?;
        }
        if da.regions.len() != db.regions.len() {
            return Err(format!("`{}` region count differs", da.name));
        }
        for (&ra, &rb) in da.regions.iter().zip(&db.regions) {
            let (ba, bb) = (self.a.region_blocks(ra), self.b.region_blocks(rb));
            if ba.len() != bb.len() {
                return Err(format!("`{}` block count {} vs {}", da.name, ba.len(), bb.len()));
            }
            for (&x1, &y1) in ba.iter().zip(bb) {
                self.blocks.insert(x1, y1);
                let (aa, ab) = (&self.a.block(x1).args, &self.b.block(y1).args);
                if aa.len() != ab.len() {
                    return Err(format!("block argument count {} vs {}", aa.len(), ab.len()));
                }
                for (&va, &vb) in aa.iter().zip(ab) {
                    self.pair_value(va, vb)?;
                }
                let (oa, ob) = (&self.a.block(x1).ops, &self.b.block(y1).ops);
                if oa.len() != ob.len() {
                    return Err(format!("block op count {} vs {} inside `{}`", oa.len(), ob.len(), da.name));
                }
                for (&p, &q) in oa.iter().zip(ob) {
                    self.defs(p, q)?;
                }
            }
        }
        Ok(())
    }

    fn pair_value(&mut self, va: ValueId, vb: ValueId) -> Result<(), String> {
        if self.a.ty(va) != self.b.ty(vb) {
            return Err(format!("value type `{}` vs `{}`", self.a.ty(va), self.b.ty(vb)));
        }
        self.values.insert(va, vb);
        Ok(())
    }

    fn same(&self, va: ValueId, vb: ValueId) -> bool {
        self.values.get(&va) == Some(&vb)
    }

    fn uses(&self, x: OpId, y: OpId) -> Result<(), String> {
        let (da, db) = (self.a.op(x), self.b.op(y));
        let name = da.name;
        if da.operands.len() != db.operands.len() {
            return Err(format!("`{name}` operand count {} vs {}", da.operands.len(), db.operands.len()));
        }
        for (i, (&va, &vb)) in da.operands.iter().zip(&db.operands).enumerate() {
            if !self.same(va, vb) {
                return Err(format!("`{name}` operand {i} is wired differently"));
            }
        }
        if da.accesses.len() != db.accesses.len() {
            return Err(format!("`{name}` register accesses differ"));
        }
        for (aa, ab) in da.accesses.iter().zip(&db.accesses) {
            if aa.operand != ab.operand {
                return Err(format!("`{name}` register accesses differ"));
            }
            let ca: Vec<&Index> = aa.range.components().collect();
            let cb: Vec<&Index> = ab.range.components().collect();
            if ca.len() != cb.len() || aa.range.stop.is_some() != ab.range.stop.is_some() {
                return Err(format!("`{name}` register access shape differs"));
            }
            for (p, q) in ca.into_iter().zip(cb) {
                let ok = match (p, q) {
                    (Index::Static(u), Index::Static(v)) => u == v,
                    (Index::Dyn(u), Index::Dyn(v)) => self.same(*u, *v),
                    _ => false,
                };
                if !ok {
                    return Err(format!("`{name}` register index differs"));
                }
            }
        }
        if da.successors.len() != db.successors.len() {
            return Err(format!("`{name}` successor count differs"));
        }
        for (sa, sb) in da.successors.iter().zip(&db.successors) {
            if self.blocks.get(&sa.block) != Some(&sb.block) {
                return Err(format!("`{name}` branches to a different block"));
            }
            if sa.args.len() != sb.args.len() || sa.args.iter().zip(&sb.args).any(|(p, q)| !self.same(*p, *q)) {
                return Err(format!("`{name}` branch arguments differ"));
            }
        }
        for (&ra, &rb) in da.regions.iter().zip(&db.regions) {
            for (&x1, &y1) in self.a.region_blocks(ra).iter().zip(self.b.region_blocks(rb)) {
                for (&p, &q) in self.a.block(x1).ops.iter().zip(&self.b.block(y1).ops) {
                    self.uses(p, q)?;
                }
            }
        }
        Ok(())
    }
}
