//! Segment modules: one derived type per segment plus its commands.

use std::fmt::Write as _;

use crate::frontend::expr::{split_top_level, ExprTokenStream};
use crate::model::{FieldDef, FieldType, SegmentDefinition};
use crate::transform::target::{TargetKind, TargetNode, Template, TemplateRole};

/// Type-bound procedures every segment overrides.
pub const BOUND_PROCEDURES: [&str; 6] = ["segsup", "segcop", "segmov", "segprt", "seg_store", "seg_type"];

/// Generic command names exported by every segment module, with the
/// specific procedure suffix bound to each.
pub const GENERIC_COMMANDS: [(&str, &str); 6] = [
    ("segini", "segini"),
    ("segadj", "segadj"),
    ("segsup", "segsup_ptr"),
    ("segcop", "segcop_ptr"),
    ("segprt", "segprt_ptr"),
    ("segmov", "segmov_ptr"),
];

fn deferred_shape(rank: usize) -> String {
    vec![":"; rank].join(",")
}

fn render_dims(dims: &[ExprTokenStream]) -> String {
    dims.iter().map(|d| d.render()).collect::<Vec<_>>().join(", ")
}

/// Lower and upper bound of one dimension; the lower bound is absent for
/// the default of 1.
fn bounds(dim: &ExprTokenStream) -> (Option<String>, String) {
    let parts = split_top_level(&dim.0, |t| t.is_op(":"));
    match parts.as_slice() {
        [lo, hi] => (Some(lo.render()), hi.render()),
        _ => (None, dim.render()),
    }
}

fn ref_type(seg: &str) -> String {
    format!("{seg}_ref")
}

/// Element type spelling of a field.
fn element_type(f: &FieldDef) -> String {
    match &f.base_type {
        FieldType::Pointer(seg) if f.rank() > 0 => format!("type({})", ref_type(seg)),
        other => other.modern(),
    }
}

/// Component declaration inside the derived type.
fn component(f: &FieldDef) -> String {
    let ty = element_type(f);
    match (&f.base_type, f.rank(), f.is_dynamic) {
        (FieldType::Pointer(_), 0, _) => format!("{ty}, pointer, public :: {} => null()", f.name),
        (_, r, true) => format!("{ty}, pointer, public :: {}({}) => null()", f.name, deferred_shape(r)),
        (FieldType::Pointer(_), _, false) => format!("{ty}, public :: {}({})", f.name, render_dims(&f.dims)),
        (t, 0, false) => format!("{ty}, public :: {} = {}", f.name, t.zero()),
        (t, _, false) => format!("{ty}, public :: {}({}) = {}", f.name, render_dims(&f.dims), t.zero()),
    }
}

fn extent_fn(f: &FieldDef) -> String {
    format!("{{1}}_{}_extent", f.name)
}

fn dimvar_args(seg: &SegmentDefinition) -> String {
    seg.dimensioning_vars.iter().map(|v| format!(", {v}")).collect()
}

fn dimvar_list(seg: &SegmentDefinition) -> String {
    seg.dimensioning_vars.join(", ")
}

/// Shape expression used when allocating `f`, from its extents `ext`.
fn alloc_shape(f: &FieldDef, ext: &str) -> String {
    f.dims
        .iter()
        .enumerate()
        .map(|(k, d)| match bounds(d).0 {
            Some(lo) => format!("{lo}:({lo})+{ext}({})-1", k + 1),
            None => format!("{ext}({})", k + 1),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Statement zeroing a freshly allocated array, if its type has a zero.
fn zero_fill(target: &str, f: &FieldDef) -> Option<String> {
    match &f.base_type {
        FieldType::Pointer(_) => None,
        t => Some(format!("{target} = {}", t.zero())),
    }
}

/// Private function computing the extents of one dynamic array from all
/// dimensioning variables.
pub fn extent_function(seg: &SegmentDefinition, f: &FieldDef) -> Template {
    let mut t = String::new();
    let _ = writeln!(t, "function {}({}) result(extent)", extent_fn(f), dimvar_list(seg));
    for v in &seg.dimensioning_vars {
        let _ = writeln!(t, "  integer, intent(in) :: {v}");
    }
    let _ = writeln!(t, "  integer :: extent({})", f.rank());
    for (k, d) in f.dims.iter().enumerate() {
        match bounds(d) {
            (Some(lo), hi) => {
                let _ = writeln!(t, "  extent({}) = ({hi}) - ({lo}) + 1", k + 1);
            }
            (None, hi) => {
                let _ = writeln!(t, "  extent({}) = {hi}", k + 1);
            }
        }
    }
    let _ = writeln!(t, "  if (any(extent < 0)) error stop '{{1}}: negative extent for field {}'", f.name);
    let _ = write!(t, "end function {}", extent_fn(f));
    Template::new(TemplateRole::Procedure, format!("{}_{}_extent", seg.name, f.name), t).bind(1, &seg.name)
}

fn segini_body(seg: &SegmentDefinition) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "subroutine {{1}}_segini(p{})", dimvar_args(seg));
    let _ = writeln!(t, "  type({{1}}), pointer, intent(out) :: p");
    for v in &seg.dimensioning_vars {
        let _ = writeln!(t, "  integer, intent(in) :: {v}");
    }
    for f in seg.dynamic_fields() {
        let _ = writeln!(t, "  integer :: ext_{}({})", f.name, f.rank());
    }
    let _ = writeln!(t, "  allocate(p)");
    for v in &seg.dimensioning_vars {
        let _ = writeln!(t, "  p%{v} = {v}");
    }
    for f in seg.dynamic_fields() {
        let ext = format!("ext_{}", f.name);
        let _ = writeln!(t, "  {ext} = {}({})", extent_fn(f), dimvar_list(seg));
        let _ = writeln!(t, "  allocate(p%{}({}))", f.name, alloc_shape(f, &ext));
        if let Some(z) = zero_fill(&format!("p%{}", f.name), f) {
            let _ = writeln!(t, "  {z}");
        }
    }
    let _ = write!(t, "end subroutine {{1}}_segini");
    t
}

/// Slice of the leading `m` elements along every dimension of `a`.
fn leading_slice(a: &str, m: &str, rank: usize) -> String {
    let dims: Vec<String> = (1..=rank)
        .map(|k| format!("lbound({a},{k}):lbound({a},{k})+{m}({k})-1"))
        .collect();
    format!("{a}({})", dims.join(", "))
}

fn segadj_body(seg: &SegmentDefinition) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "subroutine {{1}}_segadj(p{})", dimvar_args(seg));
    let _ = writeln!(t, "  type({{1}}), intent(inout) :: p");
    for v in &seg.dimensioning_vars {
        let _ = writeln!(t, "  integer, intent(in) :: {v}");
    }
    for f in seg.dynamic_fields() {
        let r = f.rank();
        let _ = writeln!(t, "  integer :: ext_{n}({r}), cnt_{n}({r})", n = f.name);
        let _ = writeln!(t, "  {}, pointer :: new_{}({})", element_type(f), f.name, deferred_shape(r));
    }
    for f in seg.dynamic_fields() {
        let n = &f.name;
        let _ = writeln!(t, "  ext_{n} = {}({})", extent_fn(f), dimvar_list(seg));
        let _ = writeln!(t, "  allocate(new_{n}({}))", alloc_shape(f, &format!("ext_{n}")));
        if let Some(z) = zero_fill(&format!("new_{n}"), f) {
            let _ = writeln!(t, "  {z}");
        }
        let _ = writeln!(t, "  if (associated(p%{n})) then");
        let _ = writeln!(t, "    cnt_{n} = min(shape(p%{n}), ext_{n})");
        let _ = writeln!(
            t,
            "    {} = {}",
            leading_slice(&format!("new_{n}"), &format!("cnt_{n}"), f.rank()),
            leading_slice(&format!("p%{n}"), &format!("cnt_{n}"), f.rank())
        );
        let _ = writeln!(t, "    deallocate(p%{n})");
        let _ = writeln!(t, "  end if");
        let _ = writeln!(t, "  p%{n} => new_{n}");
    }
    for v in &seg.dimensioning_vars {
        let _ = writeln!(t, "  p%{v} = {v}");
    }
    let _ = write!(t, "end subroutine {{1}}_segadj");
    t
}

fn segsup_body(seg: &SegmentDefinition) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "subroutine {{1}}_segsup(this)");
    let _ = writeln!(t, "  class({{1}}), intent(inout) :: this");
    for f in seg.dynamic_fields() {
        let _ = writeln!(t, "  if (associated(this%{n})) deallocate(this%{n})", n = f.name);
        let _ = writeln!(t, "  this%{} => null()", f.name);
    }
    for v in &seg.dimensioning_vars {
        let _ = writeln!(t, "  this%{v} = 0");
    }
    let _ = writeln!(t, "end subroutine {{1}}_segsup");
    let _ = writeln!(t);
    let _ = writeln!(t, "subroutine {{1}}_segsup_ptr(p)");
    let _ = writeln!(t, "  type({{1}}), pointer, intent(inout) :: p");
    let _ = writeln!(t, "  if (.not. associated(p)) error stop 'segsup: {{1}} pointer is not associated'");
    let _ = writeln!(t, "  call p%segsup()");
    let _ = writeln!(t, "  deallocate(p)");
    let _ = write!(t, "end subroutine {{1}}_segsup_ptr");
    t
}

/// Statements copying every field of `src` into `this`; arrays of `this`
/// are freshly allocated.
fn deep_copy_fresh(seg: &SegmentDefinition) -> Vec<String> {
    let mut out = Vec::new();
    for v in &seg.dimensioning_vars {
        out.push(format!("this%{v} = src%{v}"));
    }
    for f in &seg.fields {
        let n = &f.name;
        match (&f.base_type, f.rank(), f.is_dynamic) {
            (FieldType::Pointer(_), 0, _) => out.push(format!("this%{n} => src%{n}")),
            (_, _, true) => {
                out.push(format!("if (associated(src%{n})) then"));
                out.push(format!("  allocate(this%{n}, source=src%{n})"));
                out.push("else".into());
                out.push(format!("  this%{n} => null()"));
                out.push("end if".into());
            }
            _ => out.push(format!("this%{n} = src%{n}")),
        }
    }
    out
}

/// Statements copying every field of `src` into the existing arrays of
/// `this`.
fn deep_copy_into(seg: &SegmentDefinition) -> Vec<String> {
    let mut out = Vec::new();
    for f in seg.dynamic_fields() {
        let n = &f.name;
        out.push(format!(
            "if (.not. associated(this%{n})) error stop 'segmov: field {n} of the target {{1}} is not allocated'"
        ));
        out.push(format!(
            "if (.not. associated(src%{n})) error stop 'segmov: field {n} of the source {{1}} is not allocated'"
        ));
        out.push(format!(
            "if (any(shape(this%{n}) /= shape(src%{n}))) error stop 'segmov: field {n} differs in shape'"
        ));
    }
    for v in &seg.dimensioning_vars {
        out.push(format!("this%{v} = src%{v}"));
    }
    for f in &seg.fields {
        let n = &f.name;
        match (&f.base_type, f.rank()) {
            (FieldType::Pointer(_), 0) => out.push(format!("this%{n} => src%{n}")),
            _ => out.push(format!("this%{n} = src%{n}")),
        }
    }
    out
}

fn copy_procedure(name: &str, stmts: &[String]) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "subroutine {{1}}_{name}(this, src)");
    let _ = writeln!(t, "  class({{1}}), intent(inout) :: this");
    let _ = writeln!(t, "  class(segment), intent(in) :: src");
    let _ = writeln!(t, "  select type (src)");
    let _ = writeln!(t, "  type is ({{1}})");
    for s in stmts {
        let _ = writeln!(t, "    {s}");
    }
    let _ = writeln!(t, "  class default");
    let _ = writeln!(t, "    error stop '{name}: source is not a {{1}} segment'");
    let _ = writeln!(t, "  end select");
    let _ = write!(t, "end subroutine {{1}}_{name}");
    t
}

fn segcop_body(seg: &SegmentDefinition) -> String {
    let mut t = copy_procedure("segcop", &deep_copy_fresh(seg));
    t.push_str("\n\nsubroutine {1}_segcop_ptr(p, q)\n");
    t.push_str("  type({1}), pointer, intent(out) :: p\n");
    t.push_str("  type({1}), intent(in) :: q\n");
    t.push_str("  allocate(p)\n");
    t.push_str("  call p%segcop(q)\n");
    t.push_str("end subroutine {1}_segcop_ptr");
    t
}

fn segmov_body(seg: &SegmentDefinition) -> String {
    let mut t = copy_procedure("segmov", &deep_copy_into(seg));
    t.push_str("\n\nsubroutine {1}_segmov_ptr(p, q)\n");
    t.push_str("  type({1}), intent(inout) :: p\n");
    t.push_str("  type({1}), intent(in) :: q\n");
    t.push_str("  call p%segmov(q)\n");
    t.push_str("end subroutine {1}_segmov_ptr");
    t
}

fn segprt_body(seg: &SegmentDefinition) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "subroutine {{1}}_segprt(this)");
    let _ = writeln!(t, "  class({{1}}), intent(in) :: this");
    let _ = writeln!(t, "  write(*, '(a)') 'segment {{1}}'");
    for v in &seg.dimensioning_vars {
        let _ = writeln!(t, "  write(*, *) '{v} =', this%{v}");
    }
    for f in &seg.fields {
        let n = &f.name;
        match (&f.base_type, f.rank(), f.is_dynamic) {
            (FieldType::Pointer(_), 0, _) => {
                let _ = writeln!(t, "  write(*, *) '{n} associated =', associated(this%{n})");
            }
            (FieldType::Pointer(_), _, true) => {
                let _ = writeln!(t, "  if (associated(this%{n})) then");
                let _ = writeln!(t, "    write(*, *) '{n}(', shape(this%{n}), ') = segment references'");
                let _ = writeln!(t, "  else");
                let _ = writeln!(t, "    write(*, '(a)') '{n} = (not allocated)'");
                let _ = writeln!(t, "  end if");
            }
            (FieldType::Pointer(_), _, false) => {
                let _ = writeln!(t, "  write(*, *) '{n}(', shape(this%{n}), ') = segment references'");
            }
            (FieldType::Character(_), 0, _) => {
                let _ = writeln!(t, "  write(*, *) '{n} = ', trim(this%{n})");
            }
            (_, 0, _) => {
                let _ = writeln!(t, "  write(*, *) '{n} =', this%{n}");
            }
            (_, _, true) => {
                let _ = writeln!(t, "  if (associated(this%{n})) then");
                let _ = writeln!(t, "    write(*, *) '{n}(', shape(this%{n}), ') =', this%{n}");
                let _ = writeln!(t, "  else");
                let _ = writeln!(t, "    write(*, '(a)') '{n} = (not allocated)'");
                let _ = writeln!(t, "  end if");
            }
            (_, _, false) => {
                let _ = writeln!(t, "  write(*, *) '{n}(', shape(this%{n}), ') =', this%{n}");
            }
        }
    }
    let _ = writeln!(t, "end subroutine {{1}}_segprt");
    let _ = writeln!(t);
    let _ = writeln!(t, "subroutine {{1}}_segprt_ptr(p)");
    let _ = writeln!(t, "  type({{1}}), intent(in) :: p");
    let _ = writeln!(t, "  call p%segprt()");
    let _ = write!(t, "end subroutine {{1}}_segprt_ptr");
    t
}

const STORE_BODY: &str = "\
subroutine {1}_seg_store(this, unit)
  class({1}), intent(in) :: this
  integer, intent(in) :: unit
  ! storage of archived segments is not generated
  error stop '{1}%seg_store: not implemented'
end subroutine {1}_seg_store";

const TYPE_BODY: &str = "\
function {1}_seg_type(this) result(name)
  class({1}), intent(in) :: this
  character(len=:), allocatable :: name
  name = '{1}'
end function {1}_seg_type";

const ASSIGN_BODY: &str = "\
subroutine {1}_assign(lhs, rhs)
  type({1}), intent(inout) :: lhs
  type({1}), intent(in) :: rhs
  error stop 'use => for segment pointers'
end subroutine {1}_assign";

/// Generated command procedures of a segment, in a fixed order.
pub fn synthesize_command_bodies(seg: &SegmentDefinition) -> Vec<Template> {
    let proc = |name: &str, text: String| {
        Template::new(TemplateRole::Procedure, format!("{}_{name}", seg.name), text).bind(1, &seg.name)
    };
    vec![
        proc("segini", segini_body(seg)),
        proc("segadj", segadj_body(seg)),
        proc("segsup", segsup_body(seg)),
        proc("segcop", segcop_body(seg)),
        proc("segmov", segmov_body(seg)),
        proc("segprt", segprt_body(seg)),
        proc("seg_store", STORE_BODY.to_string()),
        proc("seg_type", TYPE_BODY.to_string()),
        proc("assign", ASSIGN_BODY.to_string()),
    ]
}

/// Segments whose types the fields of `seg` point to, other than itself.
pub fn referenced_segments(seg: &SegmentDefinition) -> Vec<(String, bool)> {
    let mut out: Vec<(String, bool)> = Vec::new();
    for f in &seg.fields {
        if let FieldType::Pointer(other) = &f.base_type {
            if *other == seg.name {
                continue;
            }
            let needs_ref = f.rank() > 0;
            match out.iter_mut().find(|(s, _)| s == other) {
                Some(e) => e.1 |= needs_ref,
                None => out.push((other.clone(), needs_ref)),
            }
        }
    }
    out.sort();
    out
}

pub fn derived_type(seg: &SegmentDefinition) -> TargetNode {
    let mut children: Vec<TargetNode> = seg
        .dimensioning_vars
        .iter()
        .map(|v| TargetNode::decl(format!("integer, private :: {v} = 0")))
        .collect();
    children.extend(seg.fields.iter().map(|f| TargetNode::decl(component(f))));
    children.push(TargetNode::contains());
    for p in BOUND_PROCEDURES {
        children.push(TargetNode::template(
            Template::new(TemplateRole::Declaration, format!("{}_{p}_binding", seg.name), format!("procedure :: {p} => {{1}}_{p}"))
                .bind(1, &seg.name),
        ));
    }
    TargetNode::block(
        TargetKind::DerivedType,
        format!("type, extends(segment) :: {}", seg.name),
        children,
        format!("end type {}", seg.name),
    )
}

pub fn migrate_segment(seg: &SegmentDefinition) -> TargetNode {
    let name = &seg.name;
    let mut body = vec![TargetNode::use_stmt("use segment_mod, only: segment")];
    for (other, needs_ref) in referenced_segments(seg) {
        let only = if needs_ref { format!("{other}, {}", ref_type(&other)) } else { other.clone() };
        body.push(TargetNode::use_stmt(format!("use {other}_mod, only: {only}")));
    }
    body.push(TargetNode::stmt("implicit none"));
    body.push(TargetNode::stmt("private"));
    body.push(TargetNode::blank());
    body.push(derived_type(seg));
    body.push(TargetNode::blank());
    body.push(TargetNode::block(
        TargetKind::DerivedType,
        format!("type :: {}", ref_type(name)),
        vec![TargetNode::decl(format!("type({name}), pointer :: p => null()"))],
        format!("end type {}", ref_type(name)),
    ));
    body.push(TargetNode::blank());
    for (generic, suffix) in GENERIC_COMMANDS {
        body.push(TargetNode::block(
            TargetKind::Declaration,
            format!("interface {generic}"),
            vec![TargetNode::decl(format!("module procedure {name}_{suffix}"))],
            format!("end interface {generic}"),
        ));
    }
    body.push(TargetNode::block(
        TargetKind::Declaration,
        "interface assignment(=)",
        vec![TargetNode::decl(format!("module procedure {name}_assign"))],
        "end interface assignment(=)",
    ));
    body.push(TargetNode::blank());
    let generics: Vec<&str> = GENERIC_COMMANDS.iter().map(|(g, _)| *g).collect();
    body.push(TargetNode::decl(format!(
        "public :: {name}, {}, {}, assignment(=)",
        ref_type(name),
        generics.join(", ")
    )));
    body.push(TargetNode::blank());
    body.push(TargetNode::contains());
    let mut procs: Vec<Template> = seg.dynamic_fields().map(|f| extent_function(seg, f)).collect();
    procs.extend(synthesize_command_bodies(seg));
    for (i, p) in procs.into_iter().enumerate() {
        if i > 0 {
            body.push(TargetNode::blank());
        }
        body.push(TargetNode::template(p));
    }
    TargetNode::module(&seg.module_name(), body)
}
