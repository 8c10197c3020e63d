"""Brute-force fixed-point semantics over finite fragments of the ground base.

The immediate-consequence operator is iterated upward from the empty set and
downward from a finite fragment of the (complete) ground atom base.  The
fragment holds finite ground terms up to a depth bound ``d`` and — since
infinite-but-regular terms are the only infinite terms we can represent —
rational ground terms with at most ``c`` cycle equations, each one
constructor deep, plus one constructor layer mixing the two.  Fragments can
additionally be seeded with externally produced terms and atoms (for
example, everything a solver's answer environment reaches), which is how
answers of the engines are checked against the model-theoretic semantics on
programs whose full fragment would be astronomically large.

All fragment terms live in one shared "arena" environment; rational seeds
are rebased into it through their canonical equation form.  The arena only
ever grows, so previously returned atoms stay valid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from hornlog.terms import (
    Atom,
    BindingEnv,
    Compound,
    EMPTY_ENV,
    Program,
    Var,
    bump_counter_past,
    canon_key,
    from_mu,
    rename_apart,
    to_mu,
    unify_atoms,
)
from hornlog.transform import transform_program

DEFAULT_CAP = 10 ** 6
INJECTED_CONSTANT = "c$0"


class FragmentError(Exception):
    pass


@dataclass
class GroundFragment:
    universe: list = field(default_factory=list)
    atoms: dict = field(default_factory=dict)  # canon atom key -> Atom
    env: BindingEnv = EMPTY_ENV
    depth: int = 0
    cycles: int = 0
    cap: int = DEFAULT_CAP
    _interned: dict = field(default_factory=dict, repr=False)

    def term_key(self, t, env: Optional[BindingEnv] = None):
        return canon_key(t, env if env is not None else self.env)

    def atom_key(self, a: Atom, env: Optional[BindingEnv] = None,
                 ignore_last: bool = False):
        e = env if env is not None else self.env
        args = a.args[:-1] if ignore_last else a.args
        return (a.pred, len(args)) + tuple(canon_key(t, e) for t in args)

    def has_atom(self, a: Atom, env: Optional[BindingEnv] = None,
                 ignore_last: bool = False) -> bool:
        return self.atom_key(a, env, ignore_last) in self.atoms

    def intern(self, t, env: BindingEnv):
        """Rebase a (possibly rational) ground term onto the arena."""
        key = canon_key(t, env)
        hit = self._interned.get(key)
        if hit is not None:
            return hit
        mu = to_mu(env, t)
        term, self.env = from_mu(mu, self.env)
        self._interned[key] = term
        return term

    def intern_atom(self, a: Atom, env: BindingEnv) -> Atom:
        return Atom(a.pred, tuple(self.intern(t, env) for t in a.args))

    def add_term(self, t, env: BindingEnv) -> None:
        key = canon_key(t, env)
        if key not in self._interned:
            if len(self.universe) >= self.cap:
                raise FragmentError(f"fragment cap {self.cap} exceeded")
            self.universe.append(self.intern(t, env))

    def add_atom(self, a: Atom, env: BindingEnv) -> None:
        key = self.atom_key(a, env)
        if key not in self.atoms:
            if len(self.atoms) >= self.cap:
                raise FragmentError(f"fragment cap {self.cap} exceeded")
            self.atoms[key] = self.intern_atom(a, env)


def _signature(p: Program):
    funcs = set()
    preds = set()
    for c in p.clauses:
        for atom in (c.head,) + c.body:
            preds.add(atom.key)
            stack = list(atom.args)
            while stack:
                t = stack.pop()
                if isinstance(t, Var):
                    continue
                funcs.add((t.functor, len(t.args)))
                stack.extend(t.args)
    return funcs, preds


def _subterm_objects(t, env: BindingEnv):
    seen = set()
    out = []
    stack = [t]
    while stack:
        x = env.walk(stack.pop())
        if isinstance(x, Var) or id(x) in seen:
            continue
        seen.add(id(x))
        out.append(x)
        stack.extend(x.args)
    return out


def build_fragment(p: Program, d: int = 2, c: int = 0, *,
                   seed_terms=(), seed_atoms=(), atom_products: bool = True,
                   cap: int = DEFAULT_CAP) -> GroundFragment:
    """Enumerate a finite, deterministic fragment of the ground base.

    ``seed_terms``/``seed_atoms`` are ``(term_or_atom, env)`` pairs taken
    into the fragment together with all their subterms.  With
    ``atom_products`` the atom set is the full product of predicates over
    the term universe; switched off, only seeded atoms are present (useful
    when the product would dwarf the cap but a known atom set is being
    checked).
    """
    funcs, preds = _signature(p)
    consts = sorted(n for n, a in funcs if a == 0)
    if not consts:
        consts = [INJECTED_CONSTANT]
        funcs.add((INJECTED_CONSTANT, 0))
    constructors = sorted((n, a) for n, a in funcs if a > 0)

    frag = GroundFragment(depth=d, cycles=c, cap=cap)

    # Finite terms, by depth layers.
    for name in consts:
        frag.add_term(Compound(name), EMPTY_ENV)
    finite = list(frag.universe)
    for _ in range(d):
        grown = list(finite)
        for name, arity in constructors:
            for combo in itertools.product(finite, repeat=arity):
                t = Compound(name, combo)
                key = canon_key(t, frag.env)
                if key not in frag._interned:
                    frag.add_term(t, frag.env)
                    grown.append(frag._interned[key])
        finite = grown

    # Rational terms: systems of up to c equations, one constructor deep.
    rational = []
    if c >= 1 and constructors:
        for m in range(1, c + 1):
            names = [f"R${i}" for i in range(1, m + 1)]
            leaves = [Compound(n) for n in consts] + [Var(n) for n in names]
            bodies = []
            for name, arity in constructors:
                bodies.extend(Compound(name, combo)
                              for combo in itertools.product(leaves,
                                                             repeat=arity))
            for system in itertools.product(bodies, repeat=m):
                env = BindingEnv({n: b for n, b in zip(names, system)})
                root = Var(names[0])
                key = canon_key(root, env)
                if key not in frag._interned:
                    frag.add_term(root, env)
                    rational.append(frag._interned[key])

        # One constructor layer mixing finite and rational parts.
        rational_ids = {id(t) for t in rational}
        base = list(frag.universe)
        for name, arity in constructors:
            for combo in itertools.product(base, repeat=arity):
                if not any(id(t) in rational_ids for t in combo):
                    continue
                frag.add_term(Compound(name, combo), frag.env)

    for t, env in seed_terms:
        for sub in _subterm_objects(t, env):
            frag.add_term(sub, env)

    for a, env in seed_atoms:
        for arg in a.args:
            for sub in _subterm_objects(arg, env):
                frag.add_term(sub, env)

    if atom_products:
        for pred, arity in sorted(preds):
            if len(frag.universe) ** arity > frag.cap:
                raise FragmentError(
                    f"atom product for {pred}/{arity} exceeds cap {frag.cap}")
            for combo in itertools.product(frag.universe, repeat=arity):
                frag.add_atom(Atom(pred, combo), frag.env)

    for a, env in seed_atoms:
        frag.add_atom(a, env)

    return frag


# ---------------------------------------------------------------------------
# The immediate-consequence operator


def _free_var_names(terms, env: BindingEnv) -> list:
    names = []
    seen = set()
    stack = list(reversed(list(terms)))
    while stack:
        x = env.walk(stack.pop())
        if isinstance(x, Var):
            if x.name not in names:
                names.append(x.name)
            continue
        if id(x) in seen:
            continue
        seen.add(id(x))
        stack.extend(reversed(x.args))
    return names


def _ground_leftovers(args, env: BindingEnv, frag: GroundFragment):
    free = _free_var_names(args, env)
    if not free:
        yield env
        return
    if len(frag.universe) ** len(free) > frag.cap:
        raise FragmentError("leftover instantiation exceeds cap")
    for combo in itertools.product(frag.universe, repeat=len(free)):
        e = env
        for name, t in zip(free, combo):
            e = e.bind(name, t)
        yield e


def tp_step(p: Program, s: dict, frag: GroundFragment,
            ignore_last: bool = False) -> dict:
    """One application of the immediate-consequence operator, restricted to
    the fragment.

    ``s`` maps canonical atom keys to representative atoms (all valid under
    the fragment arena).  Clause bodies are joined against ``s``; head
    variables the body leaves free are instantiated from the term universe.
    With ``ignore_last`` the fragment restriction skips each atom's final
    argument — the mode used for programs carrying proof arguments, whose
    proof terms are not fragment members.
    """
    by_key = {}
    for a in s.values():
        by_key.setdefault(a.key, []).append(a)
    fragment_by_key = {}
    for a in frag.atoms.values():
        fragment_by_key.setdefault(a.key, []).append(a)
    out = {}
    for clause in p.clauses:
        rc, env0 = rename_apart(clause, frag.env)
        stack = [(0, env0)]
        while stack:
            i, env = stack.pop()
            if i < len(rc.body):
                for member in by_key.get(rc.body[i].key, ()):
                    u = unify_atoms(rc.body[i], member, env,
                                    occurs_check=False)
                    if u is not None:
                        stack.append((i + 1, u))
                continue
            # Instantiate whatever the body join left free by unifying the
            # head against the fragment's own atoms: every admissible ground
            # instance *is* a fragment atom, so this enumerates exactly the
            # instantiations a product over the term universe would find,
            # without the universe^arity blowup.  (With ``ignore_last`` the
            # proof argument stays out of the key, so proof variables simply
            # remain free in the stored representative: any junk grounding
            # would witness the same key.)
            width = len(rc.head.args) - (1 if ignore_last else 0)
            trimmed = Atom(rc.head.pred, rc.head.args[:width])
            if not _free_var_names(trimmed.args, env):
                if not frag.has_atom(rc.head, env, ignore_last):
                    continue
                matches = [env]
            else:
                matches = []
                for cand in fragment_by_key.get(trimmed.key, ()):
                    u = unify_atoms(trimmed, cand, env, occurs_check=False)
                    if u is not None:
                        matches.append(u)
            for envf in matches:
                key = frag.atom_key(rc.head, envf, ignore_last)
                if key not in out:
                    if len(out) > frag.cap:
                        raise FragmentError("consequence set exceeds cap")
                    out[key] = frag.intern_atom(rc.head, envf)
    return out


@dataclass
class FixpointTrace:
    direction: str  # up | down
    sets: list      # n+1 dicts of canon key -> Atom
    fixed_point: bool
    frag: GroundFragment

    def final(self) -> dict:
        return self.sets[-1]


def tp_up(p: Program, n: int, frag: GroundFragment,
          ignore_last: bool = False) -> FixpointTrace:
    """Iterate upward from the empty set: n+1 increasing sets."""
    sets = [{}]
    fixed = False
    for _ in range(n):
        if fixed:
            sets.append(sets[-1])
            continue
        nxt = tp_step(p, sets[-1], frag, ignore_last)
        fixed = nxt.keys() == sets[-1].keys()
        sets.append(nxt)
    return FixpointTrace("up", sets, fixed, frag)


def tp_down(p: Program, n: int, frag: GroundFragment) -> FixpointTrace:
    """Iterate downward from the whole fragment: n+1 decreasing sets."""
    sets = [dict(frag.atoms)]
    fixed = False
    for _ in range(n):
        if fixed:
            sets.append(sets[-1])
            continue
        nxt = tp_step(p, sets[-1], frag)
        nxt = {k: a for k, a in nxt.items() if k in sets[-1]}
        fixed = nxt.keys() == sets[-1].keys()
        sets.append(nxt)
    return FixpointTrace("down", sets, fixed, frag)


# ---------------------------------------------------------------------------
# Goal-directed membership (no materialized fragment needed)


def up_member(p: Program, a: Atom, k: int, env: BindingEnv = EMPTY_ENV) -> bool:
    """Is ``a`` (under ``env``) in the k-th upward iteration over the
    complete ground base?  Runs a stage-bounded proof search: an atom holds
    at stage k if some clause instance derives it with every body atom
    holding at stage k-1.  Exact — stages shrink, so the search terminates.
    """
    env = bump_counter_past(env, p, a)
    return next(_prove_all(p, (a,), env, k), None) is not None


def _prove_all(p: Program, atoms, env: BindingEnv, stage: int):
    if not atoms:
        yield env
        return
    if stage <= 0:
        return
    first, rest = atoms[0], atoms[1:]
    for clause in p.clauses_for(first.key):
        rc, env0 = rename_apart(clause, env)
        u = unify_atoms(rc.head, first, env0, occurs_check=False)
        if u is None:
            continue
        for env1 in _prove_all(p, rc.body, u, stage - 1):
            yield from _prove_all(p, rest, env1, stage)


def down_member_with_proof(p_trans: Program, a: Atom, k: int,
                           frag: GroundFragment,
                           memo: Optional[dict] = None) -> bool:
    """Does some proof term accompany ``a`` into the k-th downward iteration
    of the proof-carrying program?

    ``a`` is an atom over the *original* signature, valid under the fragment
    arena.  Proof positions stay unconstrained variables — the downward
    iteration only ever inspects k constructor layers of a proof, so any
    completion works once the recursion bottoms out.
    """
    if memo is None:
        memo = {}
    return _down_ok(p_trans, frag, a, k, memo)


def _down_ok(p_trans, frag, a, k, memo) -> bool:
    if k <= 0:
        return True
    key = (frag.atom_key(a), k)
    hit = memo.get(key)
    if hit is not None:
        return hit
    result = False
    for clause in p_trans.clauses:
        if clause.head.key != (a.pred, len(a.args) + 1):
            continue
        rc, env0 = rename_apart(clause, frag.env)
        stripped = Atom(rc.head.pred, rc.head.args[:-1])
        u = unify_atoms(stripped, a, env0, occurs_check=False)
        if u is None:
            continue
        orig_args = [t for b in rc.body for t in b.args[:-1]]
        for envf in _ground_leftovers(orig_args, u, frag):
            ok = True
            for b in rc.body:
                b_orig = Atom(b.pred, b.args[:-1])
                b_key = frag.atom_key(b_orig, envf)
                if b_key not in frag.atoms:
                    ok = False
                    break
                if not _down_ok(p_trans, frag, frag.atoms[b_key], k - 1,
                                memo):
                    ok = False
                    break
            if ok:
                result = True
                break
        if result:
            break
    memo[key] = result
    return result


# ---------------------------------------------------------------------------
# Transformation lemmas at desk scale


@dataclass
class LemmaReport:
    stages: int
    fragment_atoms: int
    counterexamples: list

    @property
    def holds(self) -> bool:
        return not self.counterexamples


def check_transform_lemmas(p: Program, n: int = 4, d: int = 2, c: int = 1, *,
                           cap: int = DEFAULT_CAP) -> LemmaReport:
    """Check, atom by atom over a finite fragment, that adding proof
    arguments changes neither the upward nor the downward iteration:
    an atom is in stage k exactly when some proof-carrying version of it is.
    """
    frag = build_fragment(p, d, c, cap=cap)
    tp = transform_program(p)
    counterexamples = []

    up_orig = tp_up(p, n, frag)
    up_trans = tp_up(tp.program, n, frag, ignore_last=True)
    for k in range(n + 1):
        plain = set(up_orig.sets[k].keys())
        # Stripping the proof argument from a transformed atom's key gives a
        # key in the plain fragment's format, so set comparison is direct.
        stripped = {frag.atom_key(a, frag.env, ignore_last=True)
                    for a in up_trans.sets[k].values()}
        for key in plain - stripped:
            counterexamples.append(
                f"up k={k}: {_atom_repr(up_orig.sets[k][key])} has no "
                "proof-carrying counterpart")
        for key in stripped - plain:
            counterexamples.append(
                f"up k={k}: a proof-carrying atom strips to {key} "
                "outside the plain iteration")

    down_orig = tp_down(p, n, frag)
    memo: dict = {}
    for k in range(n + 1):
        plain = down_orig.sets[k]
        for key, atom in frag.atoms.items():
            lhs = key in plain
            rhs = down_member_with_proof(tp.program, atom, k, frag, memo)
            if lhs != rhs:
                counterexamples.append(
                    f"down k={k}: {_atom_repr(atom)} "
                    f"{'in' if lhs else 'not in'} plain iteration but proof "
                    f"side says {rhs}")
    return LemmaReport(n, len(frag.atoms), counterexamples)


def _atom_repr(a: Atom) -> str:
    from hornlog import syntax
    return syntax.atom_text(a)


# ---------------------------------------------------------------------------
# Answer certificates


def certificate_fragment(p: Program, answer, *, cap: int = DEFAULT_CAP) -> GroundFragment:
    """Fragment seeded with everything a certificate answer touched.

    The answer must have been produced with ``certificate=True``; its
    selected atoms, instantiated by the final environment, form a set closed
    under the program's clauses, so the downward iteration on this fragment
    stabilizes with the answer's atoms still inside.
    """
    if answer.full_env is None or answer.selected is None:
        raise ValueError("answer carries no certificate "
                         "(solve with certificate=True)")
    env = answer.full_env
    seeds = [(atom, env) for atom in answer.selected]
    return build_fragment(p, 0, 0, seed_atoms=seeds, atom_products=False,
                          cap=cap)
