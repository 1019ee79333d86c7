from .graph import (
    ChannelDecl,
    GraphTransition,
    LabelRule,
    Named,
    Proposition,
    Receive,
    Send,
    StateDeclarator,
    SystemGraph,
    action_label,
    is_communication,
    label_state,
)
from .guards import (
    FALSE,
    TRUE,
    And,
    Cmp,
    Const,
    Implies,
    Not,
    Or,
    VarRef,
    atom_label,
    atoms,
    guard_sat,
    render,
    to_cnf,
)
from .ts import StateInfo, Transition, TransitionSystem, dump_ts, load_ts
from .values import (
    BOOL,
    INT,
    SYM,
    Domain,
    Evaluation,
    VarSignature,
    eval_merge,
    eval_override,
    eval_update,
    kind_of,
)

__all__ = [name for name in dir() if not name.startswith("_")]
