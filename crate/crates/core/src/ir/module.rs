//! Arena-backed SSA module: operations, values, blocks, regions and def-use
//! bookkeeping.
//!
//! Entities are addressed by small copyable ids. Erased operations stay in the
//! arena (flagged) so ids are never reused within one module.

use std::collections::HashMap;

use super::attr::{names, Attribute, Attrs};
use super::error::IrError;
use super::ops::{OpKind, OpName};
use super::types::Type;

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(ValueId);
id_type!(OpId);
id_type!(BlockId);
id_type!(RegionId);

/// One component of a register access expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Index {
    Static(i64),
    Dyn(ValueId),
}

impl Index {
    pub fn as_static(&self) -> Option<i64> {
        match self {
            Index::Static(v) => Some(*v),
            Index::Dyn(_) => None,
        }
    }
}

/// `%r[start]`, `%r[start, stop]` or `%r[start, stop, step]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RegAccess {
    pub start: Index,
    pub stop: Option<Index>,
    pub step: Option<Index>,
}

impl RegAccess {
    pub fn single(start: Index) -> RegAccess {
        RegAccess { start, stop: None, step: None }
    }

    /// Accesses exactly one qubit.
    pub fn is_single(&self) -> bool {
        self.stop.is_none()
    }

    pub fn components(&self) -> impl Iterator<Item = &Index> {
        std::iter::once(&self.start).chain(self.stop.iter()).chain(self.step.iter())
    }

    pub fn components_mut(&mut self) -> impl Iterator<Item = &mut Index> {
        std::iter::once(&mut self.start).chain(self.stop.iter_mut()).chain(self.step.iter_mut())
    }

    pub fn dyn_values(&self) -> impl Iterator<Item = ValueId> + '_ {
        self.components().filter_map(|c| match c {
            Index::Dyn(v) => Some(*v),
            Index::Static(_) => None,
        })
    }

    /// Number of qubits selected, when statically known.
    pub fn static_len(&self) -> Option<u64> {
        let Some(stop) = &self.stop else { return Some(1) };
        let start = self.start.as_static()?;
        let stop = stop.as_static()?;
        let step = match &self.step {
            Some(s) => s.as_static()?,
            None => 1,
        };
        if step <= 0 || stop <= start {
            return Some(0);
        }
        Some(((stop - start + step - 1) / step) as u64)
    }
}

/// Register access attached to one operand slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Access {
    pub operand: usize,
    pub range: RegAccess,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Successor {
    pub block: BlockId,
    pub args: Vec<ValueId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueDef {
    Result(OpId, u32),
    BlockArg(BlockId, u32),
}

#[derive(Clone, Debug)]
pub struct ValueData {
    pub ty: Type,
    pub def: ValueDef,
    /// One entry per use slot (an op using a value twice appears twice).
    pub uses: Vec<OpId>,
    /// Source name hint, kept for function arguments.
    pub name: Option<String>,
}

#[derive(Clone, Debug)]
pub struct OpData {
    pub name: OpName,
    pub operands: Vec<ValueId>,
    pub accesses: Vec<Access>,
    pub results: Vec<ValueId>,
    pub attrs: Attrs,
    pub regions: Vec<RegionId>,
    pub successors: Vec<Successor>,
    pub parent: Option<BlockId>,
    pub erased: bool,
}

impl OpData {
    pub fn kind(&self) -> OpKind {
        self.name.kind
    }

    pub fn has_attr(&self, name: &str) -> bool {
        self.attrs.contains_key(name)
    }

    pub fn attr(&self, name: &str) -> Option<&Attribute> {
        self.attrs.get(name)
    }

    /// Every value read by this op, in slot order (operands, dynamic indices,
    /// successor arguments).
    pub fn used_values(&self) -> Vec<ValueId> {
        let mut out = self.operands.clone();
        for a in &self.accesses {
            out.extend(a.range.dyn_values());
        }
        for s in &self.successors {
            out.extend(s.args.iter().copied());
        }
        out
    }

    /// Accesses on a given operand slot.
    pub fn accesses_of(&self, operand: usize) -> impl Iterator<Item = &RegAccess> {
        self.accesses.iter().filter(move |a| a.operand == operand).map(|a| &a.range)
    }

    pub fn callee(&self) -> Option<&str> {
        self.attrs.get(names::CALLEE).and_then(|a| a.as_str())
    }

    pub fn sym_name(&self) -> Option<&str> {
        self.attrs.get(names::SYM_NAME).and_then(|a| a.as_str())
    }
}

#[derive(Clone, Debug, Default)]
pub struct BlockData {
    pub args: Vec<ValueId>,
    pub ops: Vec<OpId>,
    pub parent: Option<RegionId>,
    pub label: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct RegionData {
    pub blocks: Vec<BlockId>,
    pub parent: Option<OpId>,
}

/// Where a newly created operation is placed.
#[derive(Clone, Copy, Debug)]
pub enum InsertPoint {
    Before(OpId),
    After(OpId),
    Start(BlockId),
    End(BlockId),
}

/// Description of an operation to create.
#[derive(Clone, Debug)]
pub struct OpSpec {
    pub name: OpName,
    pub operands: Vec<ValueId>,
    pub accesses: Vec<Access>,
    pub result_types: Vec<Type>,
    pub attrs: Attrs,
    pub successors: Vec<Successor>,
    pub num_regions: usize,
}

impl OpSpec {
    pub fn new(name: OpName) -> OpSpec {
        OpSpec {
            name,
            operands: Vec::new(),
            accesses: Vec::new(),
            result_types: Vec::new(),
            attrs: Attrs::new(),
            successors: Vec::new(),
            num_regions: 0,
        }
    }

    pub fn operands(mut self, ops: impl IntoIterator<Item = ValueId>) -> Self {
        self.operands.extend(ops);
        self
    }

    pub fn results(mut self, tys: impl IntoIterator<Item = Type>) -> Self {
        self.result_types.extend(tys);
        self
    }

    pub fn attr(mut self, name: &str, a: Attribute) -> Self {
        self.attrs.insert(name.to_string(), a);
        self
    }

    pub fn attrs(mut self, attrs: Attrs) -> Self {
        self.attrs.extend(attrs);
        self
    }

    pub fn accesses(mut self, acc: impl IntoIterator<Item = Access>) -> Self {
        self.accesses.extend(acc);
        self
    }

    pub fn successor(mut self, block: BlockId, args: Vec<ValueId>) -> Self {
        self.successors.push(Successor { block, args });
        self
    }

    pub fn regions(mut self, n: usize) -> Self {
        self.num_regions = n;
        self
    }
}

#[derive(Clone, Debug)]
pub struct Module {
    ops: Vec<OpData>,
    values: Vec<ValueData>,
    blocks: Vec<BlockData>,
    regions: Vec<RegionData>,
    top: BlockId,
}

impl Default for Module {
    fn default() -> Self {
        Self::new()
    }
}

impl Module {
    pub fn new() -> Module {
        Module {
            ops: Vec::new(),
            values: Vec::new(),
            blocks: vec![BlockData::default()],
            regions: Vec::new(),
            top: BlockId(0),
        }
    }

    /// Block holding the module's top-level operations.
    pub fn top(&self) -> BlockId {
        self.top
    }

    pub fn top_ops(&self) -> &[OpId] {
        &self.blocks[self.top.index()].ops
    }

    // ---- accessors -------------------------------------------------------

    pub fn op(&self, id: OpId) -> &OpData {
        &self.ops[id.index()]
    }

    pub fn op_mut(&mut self, id: OpId) -> &mut OpData {
        &mut self.ops[id.index()]
    }

    pub fn value(&self, v: ValueId) -> &ValueData {
        &self.values[v.index()]
    }

    pub fn ty(&self, v: ValueId) -> &Type {
        &self.values[v.index()].ty
    }

    pub fn set_type(&mut self, v: ValueId, ty: Type) {
        self.values[v.index()].ty = ty;
    }

    pub fn uses(&self, v: ValueId) -> &[OpId] {
        &self.values[v.index()].uses
    }

    pub fn num_uses(&self, v: ValueId) -> usize {
        self.values[v.index()].uses.len()
    }

    pub fn set_value_name(&mut self, v: ValueId, name: Option<String>) {
        self.values[v.index()].name = name;
    }

    pub fn defining_op(&self, v: ValueId) -> Option<OpId> {
        match self.values[v.index()].def {
            ValueDef::Result(op, _) => Some(op),
            ValueDef::BlockArg(..) => None,
        }
    }

    /// Result index of `v` within its defining op.
    pub fn result_index(&self, v: ValueId) -> Option<usize> {
        match self.values[v.index()].def {
            ValueDef::Result(_, i) => Some(i as usize),
            ValueDef::BlockArg(..) => None,
        }
    }

    /// Block in which `v` is defined (block arguments or op results).
    pub fn value_block(&self, v: ValueId) -> Option<BlockId> {
        match self.values[v.index()].def {
            ValueDef::Result(op, _) => self.ops[op.index()].parent,
            ValueDef::BlockArg(b, _) => Some(b),
        }
    }

    pub fn block(&self, b: BlockId) -> &BlockData {
        &self.blocks[b.index()]
    }

    pub fn block_mut(&mut self, b: BlockId) -> &mut BlockData {
        &mut self.blocks[b.index()]
    }

    pub fn region(&self, r: RegionId) -> &RegionData {
        &self.regions[r.index()]
    }

    pub fn num_values(&self) -> usize {
        self.values.len()
    }

    pub fn num_op_slots(&self) -> usize {
        self.ops.len()
    }

    pub fn name(&self, op: OpId) -> OpName {
        self.ops[op.index()].name
    }

    pub fn kind(&self, op: OpId) -> OpKind {
        self.ops[op.index()].name.kind
    }

    pub fn is_erased(&self, op: OpId) -> bool {
        self.ops[op.index()].erased
    }

    pub fn parent_block(&self, op: OpId) -> Option<BlockId> {
        self.ops[op.index()].parent
    }

    /// Operation owning the region that contains `op`, if any.
    pub fn parent_op(&self, op: OpId) -> Option<OpId> {
        let b = self.ops[op.index()].parent?;
        let r = self.blocks[b.index()].parent?;
        self.regions[r.index()].parent
    }

    pub fn block_parent_op(&self, b: BlockId) -> Option<OpId> {
        let r = self.blocks[b.index()].parent?;
        self.regions[r.index()].parent
    }

    /// Entry block of an op's `i`-th region.
    pub fn region_entry(&self, op: OpId, i: usize) -> BlockId {
        let r = self.ops[op.index()].regions[i];
        self.regions[r.index()].blocks[0]
    }

    /// Position of `op` within its parent block.
    pub fn op_position(&self, op: OpId) -> Option<usize> {
        let b = self.ops[op.index()].parent?;
        self.blocks[b.index()].ops.iter().position(|o| *o == op)
    }

    /// Last operation of a block, usually its terminator.
    pub fn terminator(&self, b: BlockId) -> Option<OpId> {
        self.blocks[b.index()].ops.last().copied()
    }

    pub fn is_ancestor(&self, ancestor: OpId, mut op: OpId) -> bool {
        loop {
            if op == ancestor {
                return true;
            }
            match self.parent_op(op) {
                Some(p) => op = p,
                None => return false,
            }
        }
    }

    // ---- symbols ---------------------------------------------------------

    /// Map from symbol name to defining top-level op.
    pub fn symbols(&self) -> HashMap<String, OpId> {
        let mut map = HashMap::new();
        for &op in self.top_ops() {
            if let Some(name) = self.ops[op.index()].sym_name() {
                map.entry(name.to_string()).or_insert(op);
            }
        }
        map
    }

    pub fn lookup(&self, sym: &str) -> Option<OpId> {
        self.top_ops()
            .iter()
            .copied()
            .find(|&op| self.ops[op.index()].sym_name() == Some(sym))
    }

    /// Argument types of a `func`/`circ` definition.
    pub fn func_arg_types(&self, func: OpId) -> Vec<Type> {
        let entry = self.region_entry(func, 0);
        self.blocks[entry.index()].args.iter().map(|v| self.ty(*v).clone()).collect()
    }

    pub fn func_result_types(&self, func: OpId) -> Vec<Type> {
        match self.ops[func.index()].attrs.get(names::RESULTS) {
            Some(Attribute::List(items)) => items
                .iter()
                .filter_map(|a| match a {
                    Attribute::Type(t) => Some(t.clone()),
                    _ => None,
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn set_func_result_types(&mut self, func: OpId, tys: Vec<Type>) {
        self.ops[func.index()].attrs.insert(
            names::RESULTS.to_string(),
            Attribute::List(tys.into_iter().map(Attribute::Type).collect()),
        );
    }

    // ---- creation --------------------------------------------------------

    fn new_value(&mut self, ty: Type, def: ValueDef) -> ValueId {
        let id = ValueId(self.values.len() as u32);
        self.values.push(ValueData { ty, def, uses: Vec::new(), name: None });
        id
    }

    fn add_uses(&mut self, op: OpId) {
        for v in self.ops[op.index()].used_values() {
            self.values[v.index()].uses.push(op);
        }
    }

    fn drop_uses(&mut self, op: OpId) {
        for v in self.ops[op.index()].used_values() {
            let uses = &mut self.values[v.index()].uses;
            if let Some(p) = uses.iter().position(|u| *u == op) {
                uses.swap_remove(p);
            }
        }
    }

    /// Creates a detached operation with fresh result values and empty regions.
    pub fn create_op(&mut self, spec: OpSpec) -> OpId {
        let id = OpId(self.ops.len() as u32);
        self.ops.push(OpData {
            name: spec.name,
            operands: spec.operands,
            accesses: spec.accesses,
            results: Vec::new(),
            attrs: spec.attrs,
            regions: Vec::new(),
            successors: spec.successors,
            parent: None,
            erased: false,
        });
        let results: Vec<ValueId> = spec
            .result_types
            .into_iter()
            .enumerate()
            .map(|(i, ty)| self.new_value(ty, ValueDef::Result(id, i as u32)))
            .collect();
        self.ops[id.index()].results = results;
        for _ in 0..spec.num_regions {
            self.add_region(id);
        }
        self.add_uses(id);
        id
    }

    /// Creates an op and inserts it.
    pub fn insert_new(&mut self, at: InsertPoint, spec: OpSpec) -> OpId {
        let op = self.create_op(spec);
        self.insert(op, at);
        op
    }

    pub fn add_region(&mut self, op: OpId) -> RegionId {
        let r = RegionId(self.regions.len() as u32);
        self.regions.push(RegionData { blocks: Vec::new(), parent: Some(op) });
        self.ops[op.index()].regions.push(r);
        r
    }

    /// Appends a block with the given argument types to a region.
    pub fn add_block(&mut self, region: RegionId, arg_types: Vec<Type>) -> BlockId {
        let b = BlockId(self.blocks.len() as u32);
        self.blocks.push(BlockData { args: Vec::new(), ops: Vec::new(), parent: Some(region), label: None });
        for ty in arg_types {
            self.add_block_arg(b, ty);
        }
        self.regions[region.index()].blocks.push(b);
        b
    }

    pub fn add_block_arg(&mut self, b: BlockId, ty: Type) -> ValueId {
        let idx = self.blocks[b.index()].args.len() as u32;
        let v = self.new_value(ty, ValueDef::BlockArg(b, idx));
        self.blocks[b.index()].args.push(v);
        v
    }

    /// Inserts a block argument at `pos`, shifting later arguments.
    pub fn insert_block_arg(&mut self, b: BlockId, pos: usize, ty: Type) -> ValueId {
        let v = self.new_value(ty, ValueDef::BlockArg(b, pos as u32));
        self.blocks[b.index()].args.insert(pos, v);
        for (i, a) in self.blocks[b.index()].args.clone().into_iter().enumerate().skip(pos + 1) {
            self.values[a.index()].def = ValueDef::BlockArg(b, i as u32);
        }
        v
    }

    /// Places a detached op at an insertion point.
    pub fn insert(&mut self, op: OpId, at: InsertPoint) {
        debug_assert!(self.ops[op.index()].parent.is_none(), "op already placed");
        let (block, pos) = match at {
            InsertPoint::Before(o) => {
                let b = self.ops[o.index()].parent.expect("anchor op is detached");
                (b, self.op_position(o).unwrap())
            }
            InsertPoint::After(o) => {
                let b = self.ops[o.index()].parent.expect("anchor op is detached");
                (b, self.op_position(o).unwrap() + 1)
            }
            InsertPoint::Start(b) => (b, 0),
            InsertPoint::End(b) => (b, self.blocks[b.index()].ops.len()),
        };
        self.blocks[block.index()].ops.insert(pos, op);
        self.ops[op.index()].parent = Some(block);
    }

    /// Removes an op from its block without touching def-use state.
    pub fn detach(&mut self, op: OpId) {
        if let Some(b) = self.ops[op.index()].parent.take() {
            let ops = &mut self.blocks[b.index()].ops;
            if let Some(p) = ops.iter().position(|o| *o == op) {
                ops.remove(p);
            }
        }
    }

    pub fn move_op(&mut self, op: OpId, at: InsertPoint) {
        self.detach(op);
        self.insert(op, at);
    }

    // ---- mutation --------------------------------------------------------

    /// Rewrites every use of `old` to `new`. Types must match exactly.
    pub fn replace_all_uses(&mut self, old: ValueId, new: ValueId) -> Result<(), IrError> {
        if old == new {
            return Ok(());
        }
        if self.ty(old) != self.ty(new) {
            return Err(IrError::TypeMismatch(format!(
                "cannot replace value of type `{}` with `{}`",
                self.ty(old),
                self.ty(new)
            )));
        }
        self.replace_uses_unchecked(old, new);
        Ok(())
    }

    /// As [`Module::replace_all_uses`] without the type check; used by
    /// conversions that retype values.
    pub fn replace_uses_unchecked(&mut self, old: ValueId, new: ValueId) {
        let users = std::mem::take(&mut self.values[old.index()].uses);
        let mut seen: Vec<OpId> = Vec::new();
        for u in &users {
            if seen.contains(u) {
                continue;
            }
            seen.push(*u);
            let op = &mut self.ops[u.index()];
            for o in op.operands.iter_mut() {
                if *o == old {
                    *o = new;
                }
            }
            for a in op.accesses.iter_mut() {
                for c in a.range.components_mut() {
                    if *c == Index::Dyn(old) {
                        *c = Index::Dyn(new);
                    }
                }
            }
            for s in op.successors.iter_mut() {
                for a in s.args.iter_mut() {
                    if *a == old {
                        *a = new;
                    }
                }
            }
        }
        self.values[new.index()].uses.extend(users);
    }

    /// Replaces uses of `old` only inside ops for which `pred` holds.
    pub fn replace_uses_where(&mut self, old: ValueId, new: ValueId, pred: impl Fn(&Module, OpId) -> bool) {
        let users: Vec<OpId> = self.values[old.index()].uses.clone();
        let mut seen: Vec<OpId> = Vec::new();
        for u in users {
            if seen.contains(&u) || !pred(self, u) {
                continue;
            }
            seen.push(u);
            self.drop_uses(u);
            let op = &mut self.ops[u.index()];
            for o in op.operands.iter_mut() {
                if *o == old {
                    *o = new;
                }
            }
            for a in op.accesses.iter_mut() {
                for c in a.range.components_mut() {
                    if *c == Index::Dyn(old) {
                        *c = Index::Dyn(new);
                    }
                }
            }
            for s in op.successors.iter_mut() {
                for a in s.args.iter_mut() {
                    if *a == old {
                        *a = new;
                    }
                }
            }
            self.add_uses(u);
        }
    }

    pub fn set_operand(&mut self, op: OpId, idx: usize, v: ValueId) {
        self.drop_uses(op);
        self.ops[op.index()].operands[idx] = v;
        self.add_uses(op);
    }

    pub fn set_operands(&mut self, op: OpId, operands: Vec<ValueId>) {
        self.drop_uses(op);
        self.ops[op.index()].operands = operands;
        self.add_uses(op);
    }

    pub fn set_accesses(&mut self, op: OpId, accesses: Vec<Access>) {
        self.drop_uses(op);
        self.ops[op.index()].accesses = accesses;
        self.add_uses(op);
    }

    pub fn set_successor_args(&mut self, op: OpId, idx: usize, args: Vec<ValueId>) {
        self.drop_uses(op);
        self.ops[op.index()].successors[idx].args = args;
        self.add_uses(op);
    }

    pub fn set_attr(&mut self, op: OpId, name: &str, a: Attribute) {
        self.ops[op.index()].attrs.insert(name.to_string(), a);
    }

    pub fn remove_attr(&mut self, op: OpId, name: &str) {
        self.ops[op.index()].attrs.remove(name);
    }

    /// Erases an op whose results are unused. Nested regions are erased too.
    pub fn erase_op(&mut self, op: OpId) -> Result<(), IrError> {
        if self.ops[op.index()].erased {
            return Ok(());
        }
        let inner = self.nested_ops(op);
        for r in self.ops[op.index()].results.clone() {
            let external = self.values[r.index()].uses.iter().any(|u| !inner.contains(u));
            if external {
                return Err(IrError::HasLiveUses(op));
            }
        }
        self.erase_unchecked(op);
        Ok(())
    }

    /// Erases an op regardless of remaining uses of its results.
    pub fn erase_unchecked(&mut self, op: OpId) {
        let inner = self.nested_ops(op);
        for o in inner.iter().rev() {
            self.drop_uses(*o);
            self.ops[o.index()].erased = true;
        }
        self.drop_uses(op);
        self.detach(op);
        self.ops[op.index()].erased = true;
    }

    /// All ops nested (transitively) in the regions of `op`, pre-order.
    pub fn nested_ops(&self, op: OpId) -> Vec<OpId> {
        let mut out = Vec::new();
        for &r in &self.ops[op.index()].regions {
            for &b in &self.regions[r.index()].blocks {
                for &o in &self.blocks[b.index()].ops {
                    out.push(o);
                    out.extend(self.nested_ops(o));
                }
            }
        }
        out
    }

    /// Removes trailing result values from an op (they must be unused).
    pub fn truncate_results(&mut self, op: OpId, n: usize) {
        self.ops[op.index()].results.truncate(n);
    }

    /// Appends a fresh result value to an existing op.
    pub fn append_result(&mut self, op: OpId, ty: Type) -> ValueId {
        let idx = self.ops[op.index()].results.len() as u32;
        let v = self.new_value(ty, ValueDef::Result(op, idx));
        self.ops[op.index()].results.push(v);
        v
    }

    // ---- traversal -------------------------------------------------------

    /// Pre-order walk over all live ops nested under the module.
    pub fn walk_all(&self) -> Vec<OpId> {
        let mut out = Vec::new();
        for &op in self.top_ops() {
            out.push(op);
            out.extend(self.nested_ops(op));
        }
        out
    }

    /// Ops of a block, snapshot.
    pub fn block_ops(&self, b: BlockId) -> Vec<OpId> {
        self.blocks[b.index()].ops.clone()
    }

    pub fn region_blocks(&self, r: RegionId) -> &[BlockId] {
        &self.regions[r.index()].blocks
    }

    /// Top-level `func`/`circ` op enclosing `op`.
    pub fn enclosing_symbol(&self, mut op: OpId) -> Option<OpId> {
        loop {
            match self.parent_op(op) {
                Some(p) => op = p,
                None => {
                    return if self.ops[op.index()].name.is_symbol_def() { Some(op) } else { None };
                }
            }
        }
    }

    // ---- cloning ---------------------------------------------------------

    /// Deep-clones `op` (with regions) and inserts the clone at `at`.
    /// `map` translates values; entries for the clone's results are added.
    pub fn clone_op(&mut self, op: OpId, map: &mut HashMap<ValueId, ValueId>, at: InsertPoint) -> OpId {
        let new = self.clone_detached(op, map, &mut HashMap::new());
        self.insert(new, at);
        new
    }

    fn clone_detached(
        &mut self,
        op: OpId,
        map: &mut HashMap<ValueId, ValueId>,
        blocks: &mut HashMap<BlockId, BlockId>,
    ) -> OpId {
        let data = self.ops[op.index()].clone();
        let m = |v: &ValueId, map: &HashMap<ValueId, ValueId>| *map.get(v).unwrap_or(v);
        let mut accesses = data.accesses.clone();
        for a in accesses.iter_mut() {
            for c in a.range.components_mut() {
                if let Index::Dyn(v) = c {
                    *v = m(v, map);
                }
            }
        }
        let spec = OpSpec {
            name: data.name,
            operands: data.operands.iter().map(|v| m(v, map)).collect(),
            accesses,
            result_types: data.results.iter().map(|v| self.ty(*v).clone()).collect(),
            attrs: data.attrs.clone(),
            // successors are patched once all blocks of the region exist
            successors: Vec::new(),
            num_regions: 0,
        };
        let new = self.create_op(spec);
        for (old, nv) in data.results.iter().zip(self.ops[new.index()].results.clone()) {
            map.insert(*old, nv);
        }
        for &r in &data.regions {
            let nr = self.add_region(new);
            let old_blocks = self.regions[r.index()].blocks.clone();
            for &b in &old_blocks {
                let tys: Vec<Type> = self.blocks[b.index()].args.iter().map(|v| self.ty(*v).clone()).collect();
                let nb = self.add_block(nr, tys);
                self.blocks[nb.index()].label = self.blocks[b.index()].label.clone();
                blocks.insert(b, nb);
                let (oa, na) = (self.blocks[b.index()].args.clone(), self.blocks[nb.index()].args.clone());
                for (o, n) in oa.iter().zip(na.iter()) {
                    map.insert(*o, *n);
                    self.values[n.index()].name = self.values[o.index()].name.clone();
                }
            }
            for &b in &old_blocks {
                let nb = blocks[&b];
                for o in self.blocks[b.index()].ops.clone() {
                    let c = self.clone_detached(o, map, blocks);
                    self.insert(c, InsertPoint::End(nb));
                }
            }
        }
        if !data.successors.is_empty() {
            let succ = data
                .successors
                .iter()
                .map(|s| Successor {
                    block: *blocks.get(&s.block).unwrap_or(&s.block),
                    args: s.args.iter().map(|v| m(v, map)).collect(),
                })
                .collect();
            self.ops[new.index()].successors = succ;
            for v in self.ops[new.index()].successors.iter().flat_map(|s| s.args.clone()).collect::<Vec<_>>() {
                self.values[v.index()].uses.push(new);
            }
        }
        new
    }

    /// Live top-level symbol definitions in order.
    pub fn symbol_defs(&self) -> Vec<OpId> {
        self.top_ops()
            .iter()
            .copied()
            .filter(|&o| self.ops[o.index()].name.is_symbol_def())
            .collect()
    }

    /// Number of live operations (excluding erased ones).
    pub fn live_op_count(&self) -> usize {
        self.walk_all().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::ops::{Dialect, Gate};

    fn qs(kind: OpKind) -> OpName {
        OpName::new(Dialect::Qs, kind)
    }

    fn setup() -> (Module, BlockId, ValueId) {
        let mut m = Module::new();
        let f = m.insert_new(
            InsertPoint::End(m.top()),
            OpSpec::new(qs(OpKind::Circ)).attr(names::SYM_NAME, Attribute::Str("c".into())).regions(1),
        );
        let r = m.op(f).regions[0];
        let b = m.add_block(r, vec![Type::QState]);
        let arg = m.block(b).args[0];
        (m, b, arg)
    }

    #[test]
    fn replace_all_uses_moves_use_records() {
        let (mut m, b, s0) = setup();
        let h1 = m.insert_new(InsertPoint::End(b), OpSpec::new(qs(OpKind::Gate(Gate::H))).operands([s0]).results([Type::QState]));
        let s1 = m.op(h1).results[0];
        let h2 = m.insert_new(InsertPoint::End(b), OpSpec::new(qs(OpKind::Gate(Gate::H))).operands([s1]).results([Type::QState]));
        let s2 = m.op(h2).results[0];
        let ret = m.insert_new(InsertPoint::End(b), OpSpec::new(OpName::std(OpKind::Return)).operands([s2]));
        m.replace_all_uses(s2, s0).unwrap();
        assert_eq!(m.op(ret).operands, vec![s0]);
        assert_eq!(m.num_uses(s2), 0);
        assert_eq!(m.num_uses(s0), 2);
        m.erase_op(h2).unwrap();
        m.erase_op(h1).unwrap();
        assert_eq!(m.uses(s0), &[ret]);
        assert_eq!(m.block(b).ops, vec![ret]);
    }

    #[test]
    fn replace_with_zero_uses_is_noop() {
        let (mut m, b, s0) = setup();
        let a = m.insert_new(InsertPoint::End(b), OpSpec::new(qs(OpKind::Alloc)).results([Type::QState]));
        let v = m.op(a).results[0];
        m.replace_all_uses(v, s0).unwrap();
        assert_eq!(m.num_uses(s0), 0);
    }

    #[test]
    fn replace_type_mismatch() {
        let (mut m, b, s0) = setup();
        let c = m.insert_new(
            InsertPoint::End(b),
            OpSpec::new(OpName::std(OpKind::Constant)).attr(names::VALUE, Attribute::Int(1)).results([Type::i64()]),
        );
        let k = m.op(c).results[0];
        assert!(matches!(m.replace_all_uses(s0, k), Err(IrError::TypeMismatch(_))));
    }

    #[test]
    fn erase_with_live_uses_fails() {
        let (mut m, b, s0) = setup();
        let h = m.insert_new(InsertPoint::End(b), OpSpec::new(qs(OpKind::Gate(Gate::X))).operands([s0]).results([Type::QState]));
        let s1 = m.op(h).results[0];
        m.insert_new(InsertPoint::End(b), OpSpec::new(OpName::std(OpKind::Return)).operands([s1]));
        assert_eq!(m.erase_op(h), Err(IrError::HasLiveUses(h)));
    }

    #[test]
    fn clone_maps_nested_values() {
        let (mut m, b, s0) = setup();
        let h = m.insert_new(InsertPoint::End(b), OpSpec::new(qs(OpKind::Gate(Gate::X))).operands([s0]).results([Type::QState]));
        let mut map = HashMap::new();
        let c = m.clone_op(h, &mut map, InsertPoint::After(h));
        assert_eq!(m.op(c).operands, vec![s0]);
        assert_eq!(map[&m.op(h).results[0]], m.op(c).results[0]);
        assert_eq!(m.num_uses(s0), 2);
    }
}
