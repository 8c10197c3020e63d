"""Horn-clause logic toolkit.

Resolution over rational trees: classic SLD search, its coinductive variant,
and structural resolution (rewriting/substitution split), plus the clause
transformation that makes rewriting terminate, bounded fixpoint oracles for
checking the engines, and a small object-language front end whose type
checking compiles to Horn clauses.
"""

from hornlog.terms import (  # noqa: F401
    Atom,
    BindingEnv,
    Clause,
    Compound,
    EMPTY_ENV,
    Goal,
    MuTerm,
    Program,
    SourceSpan,
    Var,
    canon_key,
    from_mu,
    has_cycle,
    match,
    rational_equal,
    rename_apart,
    resolve,
    to_mu,
    unify,
)

from hornlog.syntax import (  # noqa: F401
    ParseError,
    parse_goal,
    parse_program,
    parse_term,
    print_answer,
)

from hornlog.engine import (  # noqa: F401
    Answer,
    Budget,
    Verdict,
    colp_solve,
    productivity_report,
    rewrite_normalize,
    sld_solve,
    sres_solve,
)

from hornlog.transform import (  # noqa: F401
    TransformedProgram,
    strip_answer,
    transform_goal,
    transform_program,
)

from hornlog.fixpoint import (  # noqa: F401
    build_fragment,
    certificate_fragment,
    check_transform_lemmas,
    down_member_with_proof,
    tp_down,
    tp_up,
    up_member,
)

from hornlog.minioo import parse_classes, parse_expr  # noqa: F401

from hornlog.compiler import compile_class_table, compile_expr, infer  # noqa: F401

__version__ = "0.1.0"
