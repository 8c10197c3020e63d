"""Derivation engines: SLD, coinductive SLD, and structural resolution.

All three engines share the same search discipline — leftmost atom, clause
order, depth-first — and differ in how an atom may be closed or reduced:

* ``sld_solve``: classic resolution, occurs check on by default.
* ``colp_solve``: occurs check off; before expanding an atom, try to close it
  against each same-predicate ancestor on the path (most recent first).
  Cyclic bindings produced this way are rational answers.
* ``sres_solve``: separates each resolution step into an exhaustive rewriting
  phase (clause heads *match* goal atoms; goals are never instantiated) and a
  single substitution phase (heads that unify but do not match instantiate
  the goal in place).  After ``lazy_k`` substitution steps a branch reports a
  partial answer.

A diverging rewriting phase is evidence against universal observability and
turns into a ``not_universally_observable`` verdict carrying the witness.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Optional

from hornlog import syntax
from hornlog.terms import (
    Atom,
    BindingEnv,
    Compound,
    EMPTY_ENV,
    Goal,
    Program,
    Var,
    bump_counter_past,
    has_cycle,
    match_atoms,
    rename_apart,
    resolve,
    term_vars,
    unify_atoms,
)


@dataclass(frozen=True)
class Budget:
    """Caps for the semi-decision procedures.  ``max_steps`` counts reductions
    of any kind; ``max_rewrite_steps`` bounds one normalization phase;
    ``max_subst_steps`` bounds substitution steps across a whole search.
    ``max_answers`` stops the search early once that many answers exist
    (None = keep searching until the other caps bite)."""

    max_steps: int = 10000
    max_depth: int = 500
    max_rewrite_steps: int = 1000
    max_subst_steps: int = 1000
    max_answers: Optional[int] = None


DEFAULT_BUDGET = Budget()


@dataclass
class DerivationNode:
    goal: Goal
    env: BindingEnv
    ancestors: tuple = ()  # ((atom, env snapshot), ...) root first
    depth: int = 0
    rule: Optional[str] = None
    parent: Optional["DerivationNode"] = field(default=None, repr=False)
    entry: Optional[tuple] = field(default=None, repr=False)


@dataclass
class Answer:
    bindings: BindingEnv
    goal_vars: tuple
    kind: str  # total | rational | partial
    steps_used: int = 0
    trace: Optional[list] = None
    # Populated when a solver runs with certificate=True: the unrestricted
    # solving environment and every atom selected along the successful
    # branch.  Together they let an external checker re-derive the answer.
    full_env: Optional[BindingEnv] = None
    selected: Optional[tuple] = None

    def binding(self, name: str):
        """The term bound to ``name``, substituted through; each cycle is
        unfolded once, so a rational binding reads as its defining equation
        (``cons(0, X)`` for ``X``)."""
        return resolve(self.bindings, Var(name), 1)


@dataclass
class Verdict:
    kind: str  # answers | exhausted | failed | not_universally_observable
    answers: list = field(default_factory=list)
    witness: Optional[list] = None
    steps_used: int = 0


@dataclass
class RewriteResult:
    status: str  # normal_form | diverged
    goal: Goal
    env: BindingEnv
    steps: int = 0
    witness: Optional[list] = None
    trace: Optional[list] = None


@dataclass
class ProductivityReport:
    observable: bool
    liveness: int
    produced: dict
    witness: Optional[list] = None


def goal_var_names(g: Goal) -> tuple:
    names = []
    for a in g.atoms:
        for t in a.args:
            for v in term_vars(t):
                if v.name not in names:
                    names.append(v.name)
    return tuple(names)


def _clause_index(p: Program) -> dict:
    idx = defaultdict(list)
    for c in p.clauses:
        idx[c.head.key].append(c)
    return idx


def _capped(t, depth: int = 12):
    """Copy of ``t`` truncated at ``depth``; elided subtrees become ``_``.

    Trace and witness lines pass through here: ``resolve`` already cuts
    cycles, but an acyclic chain of bindings can still be arbitrarily deep
    and displays are expected to stay line-sized."""
    if isinstance(t, Var):
        return t
    if depth == 0:
        return Var("_")
    return Compound(t.functor, tuple(_capped(a, depth - 1) for a in t.args))


def _new_bindings(child_env: BindingEnv, parent_env: BindingEnv) -> list:
    out = []
    for name in sorted(child_env.bindings.keys() - parent_env.bindings.keys()):
        out.append((name, _capped(resolve(child_env, Var(name), 2))))
    return out


# ---------------------------------------------------------------------------
# Single steps


def sld_step(node: DerivationNode, p: Program, occurs_check: bool = True) -> list:
    """Children of ``node`` under SLD resolution, in clause order."""
    if not node.goal.atoms:
        return []
    selected = node.goal.atoms[0]
    rest = node.goal.atoms[1:]
    children = []
    for clause in p.clauses_for(selected.key):
        rc, env2 = rename_apart(clause, node.env)
        u = unify_atoms(rc.head, selected, env2, occurs_check)
        if u is None:
            continue
        children.append(DerivationNode(
            goal=Goal(rc.body + rest),
            env=u,
            ancestors=node.ancestors + ((selected, node.env),),
            depth=node.depth + 1,
            rule=f"sld clause {clause.idx}",
            parent=node,
            entry=("sld", clause.idx, 0, u),
        ))
    return children


def colp_step(node: DerivationNode, p: Program) -> list:
    """Children under the coinductive discipline: hypothesis closures against
    same-predicate ancestors (most recent first) come before clause children;
    unification runs without the occurs check."""
    if not node.goal.atoms:
        return []
    selected = node.goal.atoms[0]
    rest = node.goal.atoms[1:]
    children = []
    for back, (anc, _snapshot) in enumerate(reversed(node.ancestors), start=1):
        if anc.key != selected.key:
            continue
        u = unify_atoms(anc, selected, node.env, occurs_check=False)
        if u is None:
            continue
        children.append(DerivationNode(
            goal=Goal(rest),
            env=u,
            ancestors=node.ancestors + ((selected, node.env),),
            depth=node.depth + 1,
            rule=f"hyp ancestor {back}",
            parent=node,
            entry=("hyp", back, 0, u),
        ))
    children.extend(sld_step(node, p, occurs_check=False))
    return children


# ---------------------------------------------------------------------------
# Depth-first search shared by sld_solve / colp_solve


def _classify(env: BindingEnv, goal_vars: tuple) -> str:
    if any(has_cycle(env, Var(n)) for n in goal_vars):
        return "rational"
    return "total"


def _trace_of(node: DerivationNode) -> list:
    entries = []
    cur = node
    while cur is not None:
        if cur.entry is not None:
            entries.append(cur)
        cur = cur.parent
    entries.reverse()
    lines = []
    for n, cur in enumerate(entries, start=1):
        kind, clause_id, atom_index, env = cur.entry
        parent_env = cur.parent.env if cur.parent else EMPTY_ENV
        lines.append(syntax.trace_line(
            n, kind, clause_id, atom_index, _new_bindings(env, parent_env)))
    return lines


def _answer_from(node: DerivationNode, goal_vars: tuple, steps: int,
                 want_trace: bool, certificate: bool,
                 kind: Optional[str] = None) -> Answer:
    env = node.env.restrict(goal_vars)
    answer = Answer(
        bindings=env,
        goal_vars=goal_vars,
        kind=kind or _classify(env, goal_vars),
        steps_used=steps,
        trace=_trace_of(node) if want_trace else None,
    )
    if certificate:
        chain = []
        cur = node
        while cur is not None:
            if cur.entry is not None and cur.parent is not None:
                chain.append(cur.parent.goal.atoms[0])
            cur = cur.parent
        chain.reverse()
        answer.full_env = node.env
        answer.selected = tuple(chain)
    return answer


def _dfs_solve(g: Goal, p: Program, b: Budget, step_fn, want_trace: bool,
               certificate: bool) -> Verdict:
    env0 = bump_counter_past(EMPTY_ENV, p, g)
    goal_vars = goal_var_names(g)
    root = DerivationNode(goal=g, env=env0)
    stack = [root]
    answers = []
    steps = 0
    truncated = False
    while stack:
        node = stack.pop()
        if not node.goal.atoms:
            answers.append(_answer_from(node, goal_vars, steps, want_trace,
                                        certificate))
            if b.max_answers and len(answers) >= b.max_answers:
                break
            continue
        if steps >= b.max_steps:
            truncated = True
            break
        if node.depth >= b.max_depth:
            truncated = True
            continue
        steps += 1
        children = step_fn(node)
        stack.extend(reversed(children))
    if answers:
        return Verdict("answers", answers, steps_used=steps)
    if truncated:
        return Verdict("exhausted", steps_used=steps)
    return Verdict("failed", steps_used=steps)


def sld_solve(g: Goal, p: Program, b: Budget = DEFAULT_BUDGET,
              occurs_check: bool = True, trace: bool = False,
              certificate: bool = False) -> Verdict:
    """Depth-first SLD resolution; collects every answer reachable in budget."""
    return _dfs_solve(g, p, b, lambda n: sld_step(n, p, occurs_check), trace,
                      certificate)


def colp_solve(g: Goal, p: Program, b: Budget = DEFAULT_BUDGET,
               trace: bool = False, certificate: bool = False) -> Verdict:
    """SLD plus the coinductive hypothesis rule; computes rational answers."""
    return _dfs_solve(g, p, b, lambda n: colp_step(n, p), trace, certificate)


# ---------------------------------------------------------------------------
# Structural resolution


def rewrite_normalize(g: Goal, p: Program, env: BindingEnv = EMPTY_ENV,
                      b: Budget = DEFAULT_BUDGET, collect_trace: bool = False,
                      consumed: Optional[dict] = None,
                      observer=None) -> RewriteResult:
    """Apply the rewriting reduction until no clause head matches any atom.

    One step replaces the leftmost matching atom by the clause body under the
    matcher; matching never instantiates the goal, so rewriting is the
    deterministic, answer-preserving half of a resolution step.  Exceeding
    ``max_rewrite_steps`` reports divergence with the recent goal history.
    ``observer(atoms, env)`` is called after every step, which lets callers
    watch termination measures shrink.
    """
    env0 = bump_counter_past(env, p)
    atoms = list(g.atoms)
    cur_env = env0
    steps = 0
    trace = [] if collect_trace else None
    history: deque = deque(maxlen=8)
    # Atoms to the left of the last rewrite position stay dead for the rest
    # of the phase: a step binds only freshly renamed clause variables, which
    # cannot occur in atoms that predate the renaming, and matching never
    # instantiates the goal side.  Resume each scan at that position.
    frontier = 0
    while True:
        found = None
        for ai in range(frontier, len(atoms)):
            atom = atoms[ai]
            for clause in p.clauses_for(atom.key):
                rc, env2 = rename_apart(clause, cur_env)
                sigma = match_atoms(rc.head, atom, env2)
                if sigma is not None:
                    found = (ai, rc, clause, sigma)
                    break
            if found:
                break
        if found is None:
            return RewriteResult("normal_form", Goal(tuple(atoms)), cur_env,
                                 steps, trace=trace)
        if steps >= b.max_rewrite_steps:
            witness = list(history) + [_goal_snapshot(atoms, cur_env)]
            return RewriteResult("diverged", Goal(tuple(atoms)), cur_env,
                                 steps, witness=witness, trace=trace)
        ai, rc, clause, sigma = found
        if consumed is not None:
            for arg in rc.head.args:
                for f in _functors_of(arg, cur_env):
                    consumed[f] = consumed.get(f, 0) + 1
        if trace is not None:
            trace.append(syntax.trace_line(
                steps + 1, "rw", clause.idx, ai, _new_bindings(sigma, cur_env)))
        history.append(_goal_snapshot(atoms, cur_env))
        atoms[ai:ai + 1] = list(rc.body)
        cur_env = sigma
        frontier = ai
        steps += 1
        if observer is not None:
            observer(tuple(atoms), cur_env)


def _goal_snapshot(atoms, env: BindingEnv, limit: int = 6) -> str:
    shown = [syntax.term_text(_capped(resolve(env, Compound(a.pred, a.args), 2)))
             for a in atoms[:limit]]
    if len(atoms) > limit:
        shown.append("...")
    return ", ".join(shown) if shown else "<empty>"


def _free_vars(atoms, env: BindingEnv) -> set:
    """Names of the unbound variables of the instantiated goal."""
    names = set()
    seen = set()
    stack = [Compound(a.pred, a.args) for a in atoms]
    while stack:
        x = env.walk(stack.pop())
        if isinstance(x, Var):
            names.add(x.name)
            continue
        if id(x) in seen:
            continue
        seen.add(id(x))
        stack.extend(x.args)
    return names


def _functors_of(t, env: BindingEnv) -> list:
    """Function symbols of the finite skeleton of ``t`` (no env expansion of
    cyclic parts beyond one pass)."""
    out = []
    seen = set()
    stack = [t]
    while stack:
        x = env.walk(stack.pop())
        if isinstance(x, Var):
            continue
        if id(x) in seen:
            continue
        seen.add(id(x))
        out.append(x.functor)
        stack.extend(x.args)
    return out


def subst_step(g: Goal, p: Program, env: BindingEnv = EMPTY_ENV) -> list:
    """Substitution reductions of the leftmost eligible atom.

    Eligible clauses are those whose (renamed) head unifies with the atom but
    does not match it — a matching head belongs to the rewriting phase, which
    runs first, so including it here would duplicate work.  The goal's atoms
    are unchanged; only the environment is instantiated.  Returns
    ``(goal, env, clause_idx, atom_index)`` tuples in clause order.

    An atom that unifies with no head at all can never be solved, however the
    rest of the goal instantiates it, so its presence fails the whole goal.
    Without this check a derivation could keep taking substitution steps on
    atoms to the right of an unsatisfiable one and report hollow partial
    answers for a goal that has no answers.
    """
    best: list = []
    for ai, atom in enumerate(g.atoms):
        options = []
        alive = False
        for clause in p.clauses_for(atom.key):
            rc, env2 = rename_apart(clause, env)
            u = unify_atoms(rc.head, atom, env2, occurs_check=False)
            if u is None:
                continue
            alive = True
            if match_atoms(rc.head, atom, env2) is None:
                options.append((g, u, clause.idx, ai))
        if not alive:
            return []
        if options and not best:
            best = options
    return best


@dataclass
class _SNode:
    atoms: tuple
    env: BindingEnv
    substs: int
    trace: list


def sres_solve(g: Goal, p: Program, b: Budget = DEFAULT_BUDGET,
               lazy_k: int = 3, trace: bool = False) -> Verdict:
    """Structural resolution: normalize by rewriting, then take one
    substitution step, depth-first over the substitution choices.

    Branches whose normal form is empty yield total (or rational) answers;
    branches that reach ``lazy_k`` substitution steps yield partial answers
    with whatever the goal variables are bound to so far.  A diverging
    normalization aborts the whole search as not universally observable.
    """
    env0 = bump_counter_past(EMPTY_ENV, p, g)
    goal_vars = goal_var_names(g)
    stack = [_SNode(g.atoms, env0, 0, [])]
    answers = []
    steps = 0
    subst_total = 0
    truncated = False
    while stack:
        node = stack.pop()
        rw = rewrite_normalize(Goal(node.atoms), p, node.env, b,
                               collect_trace=trace)
        steps += rw.steps
        if rw.status == "diverged":
            return Verdict("not_universally_observable", answers,
                           witness=rw.witness, steps_used=steps)
        lines = node.trace + _renumber(rw.trace, len(node.trace)) if trace else []
        if not rw.goal.atoms:
            env = rw.env.restrict(goal_vars)
            answers.append(Answer(env, goal_vars, _classify(env, goal_vars),
                                  steps_used=steps,
                                  trace=lines if trace else None))
            if b.max_answers and len(answers) >= b.max_answers:
                break
            continue
        if node.substs >= lazy_k:
            env = rw.env.restrict(goal_vars)
            answers.append(Answer(env, goal_vars, "partial", steps_used=steps,
                                  trace=lines if trace else None))
            if b.max_answers and len(answers) >= b.max_answers:
                break
            continue
        if steps >= b.max_steps or subst_total >= b.max_subst_steps:
            truncated = True
            break
        options = subst_step(rw.goal, p, rw.env)
        for goal2, env2, clause_idx, ai in reversed(options):
            subst_total += 1
            steps += 1
            child_lines = lines + [syntax.trace_line(
                len(lines) + 1, "su", clause_idx, ai,
                _new_bindings(env2, rw.env))] if trace else []
            stack.append(_SNode(goal2.atoms, env2, node.substs + 1, child_lines))
    if answers:
        return Verdict("answers", answers, steps_used=steps)
    if truncated:
        return Verdict("exhausted", steps_used=steps)
    return Verdict("failed", steps_used=steps)


def _renumber(lines, offset: int) -> list:
    if not lines:
        return []
    out = []
    for line in lines:
        head, _, rest = line.partition(" ")
        out.append(f"#{int(head[1:]) + offset} {rest}")
    return out


def productivity_report(g: Goal, p: Program, b: Budget = DEFAULT_BUDGET) -> ProductivityReport:
    """Budget-bounded evidence for observational productivity.

    Explores the structural-resolution tree: if every normalization phase
    terminates the goal is universally observable up to the budget, and the
    number of completed substitution steps witnesses liveness.  ``produced``
    counts constructors that substitution steps introduced and rewriting
    steps then consumed.
    """
    env0 = bump_counter_past(EMPTY_ENV, p, g)
    stack = [_SNode(g.atoms, env0, 0, [])]
    liveness = 0
    introduced: dict = {}
    consumed: dict = {}
    steps = 0
    while stack:
        node = stack.pop()
        rw = rewrite_normalize(Goal(node.atoms), p, node.env, b,
                               consumed=consumed)
        steps += rw.steps
        if rw.status == "diverged":
            return ProductivityReport(False, liveness, {}, witness=rw.witness)
        if not rw.goal.atoms:
            continue
        if steps >= b.max_steps or liveness >= b.max_subst_steps:
            break
        pre_vars = _free_vars(rw.goal.atoms, rw.env)
        options = subst_step(rw.goal, p, rw.env)
        for goal2, env2, _cid, _ai in reversed(options):
            liveness += 1
            steps += 1
            for name in env2.bindings.keys() - rw.env.bindings.keys():
                if name in pre_vars:
                    for f in _functors_of(env2.walk(Var(name)), env2):
                        introduced[f] = introduced.get(f, 0) + 1
            stack.append(_SNode(goal2.atoms, env2, node.substs + 1, []))
    produced = {f: min(n, consumed.get(f, 0))
                for f, n in introduced.items() if consumed.get(f)}
    return ProductivityReport(True, liveness, produced)
