"""First-order terms, binding environments, and unification.

Terms themselves are always finite trees.  Infinite (rational) trees never
exist as concrete data structures; they arise only through cycles in a
:class:`BindingEnv`, e.g. ``{X -> cons(0, X)}``.  Every operation that walks
terms therefore threads an environment and guards against revisiting the same
pair of nodes, which is what makes unification on rational trees terminate.

A :class:`MuTerm` is the exportable face of a rational term: a finite root
plus a set of contractive equations, suitable for printing and comparison.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Union


@dataclass(frozen=True)
class SourceSpan:
    """Location of a parsed node: 1-based line/column plus length."""

    file: str
    line: int
    column: int
    length: int = 0

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class Var:
    name: str
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Compound:
    """A functor applied to zero or more terms; constants are 0-ary."""

    functor: str
    args: tuple = ()
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


Term = Union[Var, Compound]

#: Functor used for bracket lists ``[a, b|T]`` and the empty list.
LIST_FUNCTOR = "."
NIL = Compound("[]")
#: Binary union type constructor, written infix as ``\/``.
UNION_FUNCTOR = "\\/"
#: Binary field-record entry, written infix as ``name:type``.
FIELD_FUNCTOR = "fld"


def const(name: str, span: Optional[SourceSpan] = None) -> Compound:
    return Compound(name, (), span)


def mklist(items, tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(list(items)):
        out = Compound(LIST_FUNCTOR, (item, out))
    return out


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple = ()
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    @property
    def key(self) -> tuple:
        return (self.pred, len(self.args))


@dataclass(frozen=True)
class Clause:
    """``head :- body``.  ``idx`` is the stable 1-based position in its program."""

    head: Atom
    body: tuple = ()
    idx: int = 0
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Program:
    clauses: tuple = ()

    def clauses_for(self, key: tuple) -> list:
        return [c for c in self.clauses if c.head.key == key]


@dataclass(frozen=True)
class Goal:
    atoms: tuple = ()


class UnificationError(Exception):
    """Raised for malformed inputs, not for ordinary unification failure."""


# ---------------------------------------------------------------------------
# Binding environments


class BindingEnv:
    """Immutable map from variable names to terms, plus a fresh-name counter.

    Bindings may be cyclic (``X -> cons(0, X)``); this is the only
    representation of rational terms in the library.  All mutating-looking
    operations return a new environment.
    """

    __slots__ = ("_b", "counter")

    def __init__(self, bindings: Optional[Mapping[str, Term]] = None, counter: int = 0):
        self._b = dict(bindings) if bindings else {}
        self.counter = counter

    @property
    def bindings(self) -> Mapping[str, Term]:
        return self._b

    def __contains__(self, name: str) -> bool:
        return name in self._b

    def __len__(self) -> int:
        return len(self._b)

    def lookup(self, name: str) -> Optional[Term]:
        return self._b.get(name)

    def walk(self, t: Term) -> Term:
        return _walk(self._b, t)

    def bind(self, name: str, value: Term) -> "BindingEnv":
        if name in self._b:
            raise UnificationError(f"variable {name} is already bound")
        new = dict(self._b)
        new[name] = value
        return BindingEnv(new, self.counter)

    def fresh(self, n: int = 1) -> tuple:
        """Return ``n`` fresh variables and the advanced environment."""
        vs = tuple(Var(f"V{self.counter + i}") for i in range(n))
        return vs, BindingEnv(self._b, self.counter + n)

    def with_counter(self, counter: int) -> "BindingEnv":
        return BindingEnv(self._b, max(self.counter, counter))

    def restrict(self, names) -> "BindingEnv":
        """Keep only bindings reachable from ``names`` (cycles preserved)."""
        keep: dict = {}
        work = [Var(n) for n in names]
        seen = set()
        while work:
            t = work.pop()
            if isinstance(t, Var):
                if t.name in seen:
                    continue
                seen.add(t.name)
                bound = self._b.get(t.name)
                if bound is not None:
                    keep[t.name] = bound
                    work.append(bound)
            else:
                work.extend(t.args)
        return BindingEnv(keep, self.counter)

    def __repr__(self) -> str:
        return f"BindingEnv({self._b!r}, counter={self.counter})"


EMPTY_ENV = BindingEnv()


def _walk(bindings: Mapping[str, Term], t: Term) -> Term:
    """Dereference variable chains.

    A pure variable loop (``X -> Y -> X``) denotes no structure at all, so it
    collapses to its lexicographically smallest member, treated as unbound.
    """
    chain: list = []
    while isinstance(t, Var):
        nxt = bindings.get(t.name)
        if nxt is None:
            return t
        if isinstance(nxt, Var) and nxt.name in chain:
            loop = chain[chain.index(nxt.name):] + [t.name]
            return Var(min(loop))
        chain.append(t.name)
        t = nxt
    return t


def term_vars(t: Term) -> Iterator[Var]:
    """Syntactic variables of a finite term, left to right, with repeats."""
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Var):
            yield x
        else:
            stack.extend(reversed(x.args))


def _occurs(bindings: Mapping[str, Term], name: str, t: Term) -> bool:
    seen = set()
    stack = [t]
    while stack:
        x = _walk(bindings, stack.pop())
        if isinstance(x, Var):
            if x.name == name:
                return True
        else:
            if id(x) in seen:
                continue
            seen.add(id(x))
            stack.extend(x.args)
    return False


# ---------------------------------------------------------------------------
# Unification and matching


def unify(t1: Term, t2: Term, env: BindingEnv = EMPTY_ENV,
          occurs_check: bool = False) -> Optional[BindingEnv]:
    """Most general unifier of ``t1`` and ``t2`` under ``env``.

    With ``occurs_check`` off this is unification on rational trees: a
    visited-pair memo lets cyclic structure unify in finite time, and the
    result environment may contain cycles (``unify(X, f(X))`` binds
    ``X -> f(X)``).  With the check on, any binding that would create a cycle
    fails instead.  Returns ``None`` on failure; never mutates ``env``.
    """
    work = dict(env._b)
    seen: set = set()
    stack = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        a = _walk(work, a)
        b = _walk(work, b)
        if isinstance(a, Var):
            if isinstance(b, Var) and a.name == b.name:
                continue
            if occurs_check and isinstance(b, Compound) and _occurs(work, a.name, b):
                return None
            work[a.name] = b
            continue
        if isinstance(b, Var):
            if occurs_check and _occurs(work, b.name, a):
                return None
            work[b.name] = a
            continue
        if a.functor != b.functor or len(a.args) != len(b.args):
            return None
        if a is b:
            continue
        key = (id(a), id(b))
        if key in seen:
            continue  # already demanded equal further up: rational-tree closure
        seen.add(key)
        stack.extend(zip(reversed(a.args), reversed(b.args)))
    return BindingEnv(work, env.counter)


def unify_atoms(a1: Atom, a2: Atom, env: BindingEnv = EMPTY_ENV,
                occurs_check: bool = False) -> Optional[BindingEnv]:
    if a1.key != a2.key:
        return None
    return unify(Compound(a1.pred, a1.args), Compound(a2.pred, a2.args),
                 env, occurs_check)


def match(pattern: Term, target: Term, env: BindingEnv = EMPTY_ENV) -> Optional[BindingEnv]:
    """Most general matcher: extend ``env`` with pattern-variable bindings so
    that the instantiated pattern equals ``target``.

    Target variables are treated as constants and never bound, so matching is
    strictly one-sided.  The pattern must be renamed apart from the target.
    The target is interpreted through ``env`` and may be cyclic; the pattern
    is a finite tree, so descent terminates on its depth.
    """
    pat_vars = {v.name for v in term_vars(pattern)}
    work = dict(env._b)
    seen: set = set()
    stack = [(pattern, target)]
    while stack:
        p, t = stack.pop()
        p = _walk(work, p)
        t = _walk(work, t)
        if isinstance(p, Var) and p.name in pat_vars and p.name not in work:
            # unbound pattern variable: fix its image
            if not (isinstance(t, Var) and t.name == p.name):
                work[p.name] = t
            continue
        if isinstance(p, Var) or isinstance(t, Var):
            # either a target variable on the pattern side (image of an
            # already-bound pattern var) or a bare target variable: must be
            # literally the same variable, since targets are never bound
            if not (isinstance(p, Var) and isinstance(t, Var) and p.name == t.name):
                return None
            continue
        if p.functor != t.functor or len(p.args) != len(t.args):
            return None
        if p is t:
            continue
        # Once a pattern variable is bound to a cyclic target, the pattern side
        # can itself become cyclic; memoize pairs so the comparison terminates.
        key = (id(p), id(t))
        if key in seen:
            continue
        seen.add(key)
        stack.extend(zip(reversed(p.args), reversed(t.args)))
    return BindingEnv(work, env.counter)


def match_atoms(pattern: Atom, target: Atom, env: BindingEnv = EMPTY_ENV) -> Optional[BindingEnv]:
    if pattern.key != target.key:
        return None
    return match(Compound(pattern.pred, pattern.args),
                 Compound(target.pred, target.args), env)


# ---------------------------------------------------------------------------
# Resolving, cycle detection, finite unfolding


def resolve(env: BindingEnv, t: Term, depth: int = 8) -> Term:
    """Substitute bindings into ``t``, unfolding each cycle at most ``depth``
    times; cut points are replaced by their variable.

    Acyclic bindings are substituted fully regardless of ``depth``.  Counting
    is per cyclic node along the current path, so sibling branches each get
    the full budget.
    """
    counts: dict = {}
    varname: dict = {}
    cyc_cache: dict = {}

    def cyclic(node: Compound) -> bool:
        nid = id(node)
        if nid in cyc_cache:
            return cyc_cache[nid]
        seen = set()
        stack = list(node.args)
        hit = False
        while stack:
            x = env.walk(stack.pop())
            if isinstance(x, Var):
                continue
            if x is node:
                hit = True
                break
            if id(x) in seen:
                continue
            seen.add(id(x))
            stack.extend(x.args)
        cyc_cache[nid] = hit
        return hit

    def go(x: Term) -> Term:
        if isinstance(x, Compound):
            return Compound(x.functor, tuple(go(a) for a in x.args), x.span)
        w = env.walk(x)
        if isinstance(w, Var):
            return w
        nid = id(w)
        varname.setdefault(nid, x.name)
        if counts.get(nid, 0) >= depth and cyclic(w):
            return Var(varname[nid])
        counts[nid] = counts.get(nid, 0) + 1
        out = Compound(w.functor, tuple(go(a) for a in w.args), w.span)
        counts[nid] -= 1
        return out

    return go(t)


def has_cycle(env: BindingEnv, t: Term) -> bool:
    """True if ``t`` under ``env`` denotes an infinite (rational) tree."""
    state: dict = {}  # id -> 1 on path, 2 done
    stack: list = [("enter", env.walk(t))]
    while stack:
        op, node = stack.pop()
        if isinstance(node, Var):
            continue
        if op == "exit":
            state[id(node)] = 2
            continue
        mark = state.get(id(node))
        if mark == 1:
            return True
        if mark == 2:
            continue
        state[id(node)] = 1
        stack.append(("exit", node))
        for a in node.args:
            stack.append(("enter", env.walk(a)))
    return False


# ---------------------------------------------------------------------------
# Rational terms as finite data: MuTerm


@dataclass(frozen=True, eq=False)
class MuTerm:
    """A rational term: finite ``root`` plus contractive equations.

    Every equation right-hand side is a compound (contractive), and every
    variable occurring anywhere is either free or has exactly one equation.
    Compare with :func:`rational_equal`, not ``==``.
    """

    root: Term
    equations: Mapping[str, Term] = field(default_factory=dict)

    def __post_init__(self):
        for name, rhs in self.equations.items():
            if not isinstance(rhs, Compound):
                raise UnificationError(
                    f"non-contractive equation {name} = {rhs!r}")

    def as_env(self) -> BindingEnv:
        return BindingEnv(self.equations)

    def __repr__(self) -> str:
        eqs = ", ".join(f"{n} = {r!r}" for n, r in self.equations.items())
        return f"MuTerm({self.root!r}, {{{eqs}}})"


def to_mu(env: BindingEnv, t: Term) -> MuTerm:
    """Convert ``t`` under ``env`` to an equivalent :class:`MuTerm`.

    Minimal in the sense of one equation per distinct cycle entry; acyclic
    bindings are inlined.  Equation variables reuse the name of the first
    variable through which the cycle is reached.
    """
    # Pass 1: find nodes with a back edge and remember the variables by which
    # each node is reached (cycles always re-enter through a variable binding).
    state: dict = {}
    first_via: dict = {}
    back_via: dict = {}

    def scan(node: Term, via: Optional[str]):
        while isinstance(node, Var):
            if via is None:
                via = node.name
            bound = env.lookup(node.name)
            if bound is None:
                return
            if isinstance(bound, Var):
                w = _walk(env._b, node)
                if isinstance(w, Var):
                    return  # pure variable loop: unbound
            node = bound
        nid = id(node)
        mark = state.get(nid)
        if mark == 1:
            back_via.setdefault(nid, via)
            return
        if mark == 2:
            return
        first_via.setdefault(nid, via)
        state[nid] = 1
        for a in node.args:
            scan(a, None)
        state[nid] = 2

    scan(t, None)

    synth = itertools.count()
    names: dict = {}
    for nid, via in back_via.items():
        name = first_via.get(nid) or via or f"Mu{next(synth)}"
        names[nid] = name

    equations: dict = {}

    def emit(node: Term, opened: frozenset) -> Term:
        node = env.walk(node)
        if isinstance(node, Var):
            return node
        nid = id(node)
        if nid in names:
            name = names[nid]
            if name not in equations and nid not in opened:
                sub = opened | {nid}
                equations[name] = Compound(
                    node.functor, tuple(emit(a, sub) for a in node.args))
            return Var(name)
        return Compound(node.functor, tuple(emit(a, opened) for a in node.args))

    walked = env.walk(t)
    if isinstance(walked, Var):
        return MuTerm(walked, {})
    if id(walked) in names:
        # root itself is a cycle entry: the root term is just its variable
        name = names[id(walked)]
        emit(walked, frozenset())
        return MuTerm(Var(name), equations)
    return MuTerm(emit(walked, frozenset()), equations)


def from_mu(m: MuTerm, env: BindingEnv) -> tuple:
    """Embed a MuTerm into ``env``: returns ``(term, new_env)`` where the
    equations become fresh cyclic bindings."""
    if not m.equations:
        return m.root, env
    names = sorted(m.equations)
    fresh, env = env.fresh(len(names))
    ren = {n: v for n, v in zip(names, fresh)}

    def sub(t: Term) -> Term:
        if isinstance(t, Var):
            return ren.get(t.name, t)
        return Compound(t.functor, tuple(sub(a) for a in t.args), t.span)

    bindings = dict(env._b)
    for n in names:
        bindings[ren[n].name] = sub(m.equations[n])
    return sub(m.root), BindingEnv(bindings, env.counter)


# ---------------------------------------------------------------------------
# Bisimulation equality and canonical keys


def _as_pair(x, env: Optional[BindingEnv]):
    if isinstance(x, MuTerm):
        return x.root, x.as_env()
    return x, (env if env is not None else EMPTY_ENV)


def rational_equal(a, b, env_a: Optional[BindingEnv] = None,
                   env_b: Optional[BindingEnv] = None,
                   alpha: bool = False) -> bool:
    """Bisimilarity of two rational terms.

    Accepts :class:`MuTerm` values or plain terms with their environments.
    With ``alpha`` set, free variables are compared up to consistent renaming
    (useful for comparing answers from independent derivations).
    """
    t1, e1 = _as_pair(a, env_a)
    t2, e2 = _as_pair(b, env_b)
    fwd: dict = {}
    bwd: dict = {}
    seen: set = set()
    stack = [(t1, t2)]
    while stack:
        x, y = stack.pop()
        x = e1.walk(x)
        y = e2.walk(y)
        if isinstance(x, Var) or isinstance(y, Var):
            if not (isinstance(x, Var) and isinstance(y, Var)):
                return False
            if alpha:
                if fwd.setdefault(x.name, y.name) != y.name:
                    return False
                if bwd.setdefault(y.name, x.name) != x.name:
                    return False
            elif x.name != y.name:
                return False
            continue
        if x.functor != y.functor or len(x.args) != len(y.args):
            return False
        key = (id(x), id(y))
        if key in seen:
            continue
        seen.add(key)
        stack.extend(zip(x.args, y.args))
    return True


def canon_key(t, env: Optional[BindingEnv] = None):
    """Canonical hashable form of a rational term (bisimulation-minimal).

    Two terms get the same key iff they are bisimilar with identical free
    variable names.  Cycles are encoded as de Bruijn-style back references.
    """
    t, env = _as_pair(t, env)
    root = env.walk(t)
    if isinstance(root, Var):
        return ("v", root.name)

    nodes: list = []
    index: dict = {}
    stack = [root]
    while stack:
        n = stack.pop()
        n = env.walk(n)
        if isinstance(n, Var) or id(n) in index:
            continue
        index[id(n)] = len(nodes)
        nodes.append(n)
        stack.extend(reversed(n.args))

    # Partition refinement: split classes by functor, then by child classes,
    # until stable (bisimulation minimization).
    cls = {}
    seed: dict = {}
    for i, n in enumerate(nodes):
        cls[i] = seed.setdefault((n.functor, len(n.args)), len(seed))
    while True:
        sig = {}
        for i, n in enumerate(nodes):
            parts = []
            for a in n.args:
                a = env.walk(a)
                parts.append(("v", a.name) if isinstance(a, Var)
                             else ("c", cls[index[id(a)]]))
            sig[i] = ((n.functor, len(n.args)), tuple(parts))
        remap: dict = {}
        new_cls = {}
        for i in range(len(nodes)):
            new_cls[i] = remap.setdefault(sig[i], len(remap))
        if len(remap) == len(set(cls.values())):
            cls = new_cls
            break
        cls = new_cls

    rep: dict = {}
    for i, n in enumerate(nodes):
        rep.setdefault(cls[i], n)

    def emit(c: int, path: tuple):
        if c in path:
            return ("up", len(path) - 1 - path.index(c))
        n = rep[c]
        parts = []
        for a in n.args:
            a = env.walk(a)
            if isinstance(a, Var):
                parts.append(("v", a.name))
            else:
                parts.append(emit(cls[index[id(a)]], path + (c,)))
        return ("f", n.functor, tuple(parts))

    return emit(cls[index[id(root)]], ())


def canon_atom_key(a: Atom, env: Optional[BindingEnv] = None) -> tuple:
    return (a.pred,) + tuple(canon_key(arg, env) for arg in a.args)


# ---------------------------------------------------------------------------
# Clause renaming


def rename_apart(c: Clause, env: BindingEnv) -> tuple:
    """Rename clause variables to fresh ``V<counter>`` names.

    Returns ``(clause, env)`` with the counter advanced, so renaming the same
    clause twice yields disjoint variable sets.
    """
    mapping: dict = {}
    counter = env.counter

    def ren_term(t: Term) -> Term:
        nonlocal counter
        if isinstance(t, Var):
            if t.name not in mapping:
                mapping[t.name] = Var(f"V{counter}", t.span)
                counter += 1
            return mapping[t.name]
        return Compound(t.functor, tuple(ren_term(a) for a in t.args), t.span)

    def ren_atom(a: Atom) -> Atom:
        return Atom(a.pred, tuple(ren_term(x) for x in a.args), a.span)

    head = ren_atom(c.head)
    body = tuple(ren_atom(a) for a in c.body)
    return Clause(head, body, c.idx, c.span), BindingEnv(env._b, counter)


def bump_counter_past(env: BindingEnv, *items) -> BindingEnv:
    """Advance the fresh counter beyond any literal ``V<n>`` variable in the
    given programs/goals/atoms, so generated names cannot collide."""
    top = env.counter

    def see(t: Term):
        nonlocal top
        for v in term_vars(t):
            if v.name.startswith("V") and v.name[1:].isdigit():
                top = max(top, int(v.name[1:]) + 1)

    def atoms_of(item):
        if isinstance(item, Program):
            for c in item.clauses:
                yield c.head
                yield from c.body
        elif isinstance(item, Goal):
            yield from item.atoms
        elif isinstance(item, Clause):
            yield item.head
            yield from item.body
        elif isinstance(item, Atom):
            yield item

    for item in items:
        for a in atoms_of(item):
            for arg in a.args:
                see(arg)
    return env.with_counter(top)
