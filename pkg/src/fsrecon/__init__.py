"""fsrecon: reconcile diverged replicas of a filesystem tree.

The package detects what changed on each replica as a canonical set of
typed commands, enumerates or resolves the ways the two change sets can
be merged, and emits executable rollback/apply plans that take both
replicas to the agreed state.
"""

from .algebra import (
    BREAKS_EVERYTHING,
    BreaksEverything,
    Command,
    CommandClass,
    classify,
    compose_same_node,
    exec_order,
    independent,
    invert,
    invert_sequence,
)
from .canonical import (
    CanonicalSet,
    Cluster,
    ClusterKind,
    NotNormalizable,
    clusters,
    is_canonical_sequence,
    is_prefix_set,
    normalize,
    order,
    set_of,
    set_violation,
    witness_filesystem,
    witness_from_befores,
)
from .detector import UpdateLog, diff_states, replay_log
from .errors import (
    CanonicalityError,
    EnumerationBoundError,
    FormatError,
    FsreconError,
    InternalInvariantError,
    PathSyntaxError,
    PolicyError,
    RefluenceError,
    TreePropertyError,
    UnknownNodeError,
    ValidationError,
)
from .fstree import (
    DIRECTORY,
    EMPTY,
    ApplyOutcome,
    Broken,
    BreakReason,
    Content,
    FileSystem,
    Kind,
    apply_command,
    apply_sequence,
    check_tree_property,
    empty_filesystem,
    enumerate_filesystems,
    file_content,
)
from .namespace import (
    Namespace,
    NodeId,
    Relation,
    build_namespace,
    comparable,
    relate,
)
from .reconciler import (
    CollapsedGraph,
    Conflict,
    ConflictGraph,
    ConflictKind,
    ConstructorWins,
    FirstWins,
    Guided,
    Interactive,
    MergePlan,
    Policy,
    ReplicaPlan,
    SecondWins,
    Side,
    StepOutcome,
    build_conflict_graph,
    collapse_constructor_clusters,
    enumerate_mergers,
    is_merger,
    merge_plan,
    reconcile,
    reconcile_disjoint,
    refluence_witness,
    resolve_step,
)

__version__ = "0.1.0"
