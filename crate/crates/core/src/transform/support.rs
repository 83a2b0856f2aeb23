//! The two modules every migrated project needs: the abstract segment
//! type and the index-based segment registry.

use crate::transform::target::{TargetFile, TargetNode, Template, TemplateRole};

pub const SEGMENT_MODULE: &str = "segment_mod";
pub const REGISTRY_MODULE: &str = "segment_registry_mod";

const SEGMENT_MOD: &str = "\
module segment_mod
  implicit none
  private

  type, abstract, public :: segment
  contains
    procedure(abstract_segsup), deferred :: segsup
    procedure(abstract_segcop), deferred :: segcop
    procedure(abstract_segmov), deferred :: segmov
    procedure(abstract_segprt), deferred :: segprt
    procedure(abstract_seg_store), deferred :: seg_store
    procedure(abstract_seg_type), deferred :: seg_type
  end type segment

  abstract interface
    subroutine abstract_segsup(this)
      import :: segment
      class(segment), intent(inout) :: this
    end subroutine abstract_segsup

    subroutine abstract_segcop(this, src)
      import :: segment
      class(segment), intent(inout) :: this
      class(segment), intent(in) :: src
    end subroutine abstract_segcop

    subroutine abstract_segmov(this, src)
      import :: segment
      class(segment), intent(inout) :: this
      class(segment), intent(in) :: src
    end subroutine abstract_segmov

    subroutine abstract_segprt(this)
      import :: segment
      class(segment), intent(in) :: this
    end subroutine abstract_segprt

    ! seg_store: archived-segment storage; generated implementations halt
    subroutine abstract_seg_store(this, unit)
      import :: segment
      class(segment), intent(in) :: this
      integer, intent(in) :: unit
    end subroutine abstract_seg_store

    ! seg_type: name of the concrete segment type
    function abstract_seg_type(this) result(name)
      import :: segment
      class(segment), intent(in) :: this
      character(len=:), allocatable :: name
    end function abstract_seg_type
  end interface

  public :: abstract_segsup, abstract_segcop, abstract_segmov, abstract_segprt
  public :: abstract_seg_store, abstract_seg_type
end module segment_mod";

const REGISTRY_MOD: &str = "\
module segment_registry_mod
  use segment_mod, only: segment
  implicit none
  private

  ! one reference per slot: arrays of pointers are not expressible directly
  type :: registry_slot
    class(segment), pointer :: ref => null()
    logical :: used = .false.
  end type registry_slot

  integer, parameter :: initial_slots = {1}
  type(registry_slot), allocatable :: slots(:)

  public :: seg_register, seg_lookup, seg_release, seg_registered

contains

  ! Index of a new slot for s; the lowest released slot is reused.
  function seg_register(s) result(idx)
    class(segment), pointer, intent(in) :: s
    integer :: idx
    type(registry_slot), allocatable :: grown(:)
    integer :: i
    if (.not. allocated(slots)) allocate(slots(initial_slots))
    do i = 1, size(slots)
      if (.not. slots(i)%used) then
        slots(i)%ref => s
        slots(i)%used = .true.
        idx = i
        return
      end if
    end do
    allocate(grown(2 * size(slots)))
    grown(1:size(slots)) = slots
    idx = size(slots) + 1
    call move_alloc(grown, slots)
    slots(idx)%ref => s
    slots(idx)%used = .true.
  end function seg_register

  function seg_lookup(idx) result(s)
    integer, intent(in) :: idx
    class(segment), pointer :: s
    call check_index(idx, 'lookup')
    s => slots(idx)%ref
  end function seg_lookup

  subroutine seg_release(idx)
    integer, intent(in) :: idx
    call check_index(idx, 'release')
    slots(idx)%ref => null()
    slots(idx)%used = .false.
  end subroutine seg_release

  function seg_registered() result(n)
    integer :: n
    n = 0
    if (allocated(slots)) n = count(slots%used)
  end function seg_registered

  subroutine check_index(idx, what)
    integer, intent(in) :: idx
    character(len=*), intent(in) :: what
    logical :: bad
    bad = .not. allocated(slots)
    if (.not. bad) bad = idx < 1 .or. idx > size(slots)
    if (.not. bad) bad = .not. slots(idx)%used
    if (bad) then
      write(*, '(a, a, a, i0)') 'segment registry: ', what, ' of invalid index ', idx
      error stop
    end if
  end subroutine check_index
end module segment_registry_mod";

/// Abstract segment module and registry module, in that order.
pub fn generate_support_modules() -> Vec<TargetFile> {
    vec![
        TargetFile {
            path: format!("{SEGMENT_MODULE}.f90"),
            nodes: vec![TargetNode::template(Template::new(
                TemplateRole::ProgramUnit,
                SEGMENT_MODULE,
                SEGMENT_MOD,
            ))],
        },
        TargetFile {
            path: format!("{REGISTRY_MODULE}.f90"),
            nodes: vec![TargetNode::template(
                Template::new(TemplateRole::ProgramUnit, REGISTRY_MODULE, REGISTRY_MOD).bind(1, "16"),
            )],
        },
    ]
}
