"""Translate class tables and expressions into logic programs.

Type checking and inference for the mini-language reduce to solving goals
against the compiled program: types are terms (``int``, ``bool``, ``null``,
``obj(c, [field:type, ...])``, unions ``a \\/ b``) and a derivation of
``invoke``/``new``/``fieldacc`` atoms is a typing proof.  The compiled
program is ordinary Horn-clause text, so every engine in
:mod:`hornlog.engine` — and the productivity transformation — applies to it
unchanged.

A compiled unit is the fixed runtime support program followed by the
clauses generated from the class table: ``class``/``extends`` facts, one
``ctor`` clause per constructor, and exactly one ``hasmeth`` clause per
method declaration.  Method bodies compile left to right, one atom per
``new``/``invoke``/field access/primitive operator; a conditional
contributes its condition's atoms (result constrained to ``bool``), both
branch bodies, and the union of the branch results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Union as TUnion

from hornlog import minioo as moo
from hornlog.engine import (
    Budget,
    DEFAULT_BUDGET,
    Verdict,
    colp_solve,
    sld_solve,
    sres_solve,
)
from hornlog.syntax import parse_program
from hornlog.terms import (
    Atom,
    Clause,
    Compound,
    FIELD_FUNCTOR,
    Goal,
    Program,
    SourceSpan,
    Term,
    UNION_FUNCTOR,
    Var,
    const,
    mklist,
)
from hornlog.transform import strip_answer, transform_goal, transform_program

#: Maps source variable names to the logic variable or closed type term
#: standing for them during expression compilation.
TypeEnv = Dict[str, Term]

_RUNTIME_SRC = """
% method invocation on object types: defer to the receiver's class,
% prepending the receiver itself as the type of `this`
invoke(obj(C, F), M, A, R) :- hasmeth(C, M, [obj(C, F)|A], R).
% a union receiver must support the method either way
invoke(T1 \\/ T2, M, A, R1 \\/ R2) :- invoke(T1, M, A, R1), invoke(T2, M, A, R2).
% methods are inherited along extends edges
hasmeth(C, M, A, R) :- extends(C, D), hasmeth(D, M, A, R).
% field access looks the field up in the object's record
fieldacc(obj(C, F), N, T) :- fieldmem(F, N, T).
fieldacc(T1 \\/ T2, N, R1 \\/ R2) :- fieldacc(T1, N, R1), fieldacc(T2, N, R2).
fieldmem([N:T|_], N, T).
fieldmem([_|F], N, T) :- fieldmem(F, N, T).
% object creation defers to the per-class constructor clause
new(C, A, obj(C, R)) :- ctor(C, A, R).
% nominal subtyping over the class graph
subclass(X, X) :- class(X).
subclass(X, object) :- class(X).
subclass(X, Z) :- extends(X, Y), subclass(Y, Z).
class(object).
ctor(object, [], []).
% primitive operator typings
leq(int, int, bool).
sub(int, int, int).
eq(X, X).
"""

_RUNTIME: Optional[Program] = None


def runtime_clauses() -> Program:
    """The fixed support clauses every compiled unit starts with."""
    global _RUNTIME
    if _RUNTIME is None:
        _RUNTIME = parse_program(_RUNTIME_SRC, "<runtime>")
    return _RUNTIME


@dataclass(frozen=True)
class CompiledUnit:
    program: Program
    #: clause idx -> source span of the declaration, or "runtime"
    provenance: dict


class _Names:
    """Allocates clause-local variable names: first request for a prefix is
    the bare prefix, later ones get numeric suffixes (R, R2, R3, ...)."""

    def __init__(self, reserved=()):
        self.used = set(reserved)

    def claim(self, want: str) -> str:
        name, i = want, 1
        while name in self.used:
            i += 1
            name = f"{want}{i}"
        self.used.add(name)
        return name


def _cap(name: str) -> str:
    return name[0].upper() + name[1:]


def _record(pairs) -> Term:
    return mklist(Compound(FIELD_FUNCTOR, (const(n), t)) for n, t in pairs)


_RESULT_PREFIX = {moo.New: "R", moo.Invoke: "T", moo.FieldAcc: "F"}


def _compile_into(e: moo.Expr, env: TypeEnv, names: _Names, atoms: list) -> Term:
    if isinstance(e, moo.IntLit):
        return const("int")
    if isinstance(e, moo.BoolLit):
        return const("bool")
    if isinstance(e, moo.Null):
        return const("null")
    if isinstance(e, moo.This):
        e = moo.Var("this", e.span)
    if isinstance(e, moo.Var):
        known = env.get(e.name)
        if known is None:
            known = Var(names.claim(_cap(e.name)))
            env[e.name] = known
        return known
    if isinstance(e, moo.New):
        args = [_compile_into(a, env, names, atoms) for a in e.args]
        out = Var(names.claim("R"))
        atoms.append(Atom("new", (const(e.cls), mklist(args), out)))
        return out
    if isinstance(e, moo.FieldAcc):
        target = _compile_into(e.target, env, names, atoms)
        out = Var(names.claim("F"))
        atoms.append(Atom("fieldacc", (target, const(e.fld), out)))
        return out
    if isinstance(e, moo.Invoke):
        target = _compile_into(e.target, env, names, atoms)
        args = [_compile_into(a, env, names, atoms) for a in e.args]
        out = Var(names.claim("T"))
        atoms.append(Atom("invoke", (target, const(e.method), mklist(args), out)))
        return out
    if isinstance(e, moo.BinOp):
        lhs = _compile_into(e.lhs, env, names, atoms)
        rhs = _compile_into(e.rhs, env, names, atoms)
        pred, prefix = ("leq", "B") if e.op == "<=" else ("sub", "S")
        out = Var(names.claim(prefix))
        atoms.append(Atom(pred, (lhs, rhs, out)))
        return out
    if isinstance(e, moo.If):
        cond = _compile_into(e.cond, env, names, atoms)
        atoms.append(Atom("eq", (cond, const("bool"))))
        then = _compile_into(e.then, env, names, atoms)
        orelse = _compile_into(e.orelse, env, names, atoms)
        return Compound(UNION_FUNCTOR, (then, orelse))
    raise TypeError(f"not an expression node: {e!r}")


def compile_expr(e: moo.Expr, env: Optional[TypeEnv] = None) -> tuple:
    """Compile an expression to ``(goal, result term)``.

    Source variables are looked up in ``env``; names not present become
    fresh logic variables (inference mode) and are added to ``env`` so
    later occurrences share them.
    """
    if env is None:
        env = {}
    names = _Names(t.name for t in env.values() if isinstance(t, Var))
    atoms: list = []
    result = _compile_into(e, env, names, atoms)
    return Goal(tuple(atoms)), result


def _ctor_clause(ct: moo.ClassTable, decl: moo.ClassDecl, idx: int) -> Clause:
    names = _Names()
    env: TypeEnv = {p: Var(names.claim(_cap(p))) for p in decl.ctor.params}
    atoms: list = []
    sup = [_compile_into(a, env, names, atoms) for a in decl.ctor.super_args]
    parent_rec = [(f, Var(names.claim(_cap(f))))
                  for f in sorted(set(ct.fields_of(decl.parent)))]
    atoms.append(Atom("ctor",
                      (const(decl.parent), mklist(sup), _record(parent_rec))))
    own: dict = {}
    for f, rhs in decl.ctor.assigns:
        own[f] = _compile_into(rhs, env, names, atoms)
    inherited = dict(parent_rec)
    record = [(f, own.get(f, inherited.get(f)))
              for f in sorted(set(ct.fields_of(decl.name)))]
    head = Atom("ctor", (const(decl.name),
                         mklist(env[p] for p in decl.ctor.params),
                         _record(record)))
    return Clause(head, tuple(atoms), idx, decl.ctor.span)


def _method_clause(decl: moo.ClassDecl, m: moo.MethodDecl, idx: int) -> Clause:
    names = _Names(["This"])
    env: TypeEnv = {"this": Var("This")}
    for p in m.params:
        env[p] = Var(names.claim(_cap(p)))
    atoms: list = []
    result = _compile_into(m.body, env, names, atoms)
    head = Atom("hasmeth", (const(decl.name), const(m.name),
                            mklist([env["this"]] + [env[p] for p in m.params]),
                            result))
    return Clause(head, tuple(atoms), idx, m.span)


def compile_class_table(ct: moo.ClassTable) -> CompiledUnit:
    runtime = runtime_clauses()
    clauses = list(runtime.clauses)
    provenance: dict = {c.idx: "runtime" for c in clauses}

    def emit(clause: Clause, span):
        clauses.append(clause)
        provenance[clause.idx] = span

    for decl in ct.classes.values():
        nxt = len(clauses) + 1
        emit(Clause(Atom("class", (const(decl.name),)), (), nxt, decl.span),
             decl.span)
        emit(Clause(Atom("extends", (const(decl.name), const(decl.parent))),
                    (), nxt + 1, decl.span), decl.span)
        emit(_ctor_clause(ct, decl, nxt + 2), decl.ctor.span)
        for m in decl.methods.values():
            emit(_method_clause(decl, m, len(clauses) + 1), m.span)
    return CompiledUnit(Program(tuple(clauses)), provenance)


def infer(ct: moo.ClassTable, e: moo.Expr, engine: str = "sres",
          budget: Budget = DEFAULT_BUDGET,
          assumptions: Optional[TypeEnv] = None, lazy_k: int = 3,
          occurs_check: bool = True) -> Verdict:
    """Compile the class table, compile ``e`` as a goal, and solve it.

    ``assumptions`` gives closed types for free source variables; anything
    not assumed is inferred.  With ``engine="sres"`` the program and goal
    are run through the productivity transformation first and the proof
    arguments are stripped from the answers.
    """
    unit = compile_class_table(ct)
    env: TypeEnv = dict(assumptions) if assumptions else {}
    goal, _result = compile_expr(e, env)
    if engine == "sld":
        return sld_solve(goal, unit.program, budget, occurs_check=occurs_check)
    if engine == "colp":
        return colp_solve(goal, unit.program, budget)
    if engine == "sres":
        t = transform_program(unit.program)
        verdict = sres_solve(transform_goal(goal), t.program, budget,
                             lazy_k=lazy_k)
        return Verdict(verdict.kind,
                       [strip_answer(a, t) for a in verdict.answers],
                       verdict.witness, verdict.steps_used)
    raise ValueError(f"unknown engine {engine!r}")
