"""Concrete syntax: program/goal parsing and answer printing.

The clause format is Prolog-like::

    from(X, [X|Y]) :- from(s(X), Y).   % bracket lists are '.'/2 pairs
    subclass(X, object) :- class(X).

plus two infix operators: ``\\/`` (union, right-associative) and ``:``
(field-record entry, binding tighter than union, internal functor ``fld``).
``%`` starts a comment.  Every parsed node carries a 1-based source span.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from hornlog.terms import (
    Atom,
    BindingEnv,
    Clause,
    Compound,
    FIELD_FUNCTOR,
    Goal,
    LIST_FUNCTOR,
    NIL,
    Program,
    SourceSpan,
    Term,
    UNION_FUNCTOR,
    Var,
    has_cycle,
    resolve,
    term_vars,
    to_mu,
)


class ParseError(Exception):
    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.span = span
        super().__init__(f"{span}: {message}" if span else message)


class PrintError(Exception):
    """Raised when an answer cannot be rendered in the requested style."""


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>%[^\n]*)
      | (?P<turnstile>:-)
      | (?P<query>\?-)
      | (?P<union>\\/)
      | (?P<int>\d+)
      | (?P<name>[a-z][A-Za-z0-9_$]*)
      | (?P<var>[A-Z_][A-Za-z0-9_$]*)
      | (?P<punct>[()\[\],|.:])
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    span: SourceSpan


def _tokenize(text: str, filename: str) -> list:
    out = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             SourceSpan(filename, line, col, 1))
        kind = m.lastgroup
        tok = m.group()
        if kind not in ("ws", "comment"):
            out.append(_Token(kind, tok, SourceSpan(filename, line, col, len(tok))))
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()
    out.append(_Token("eof", "", SourceSpan(filename, line, col, 0)))
    return out


class _Parser:
    def __init__(self, text: str, filename: str):
        self.toks = _tokenize(text, filename)
        self.i = 0
        used = {t.text for t in self.toks if t.kind == "var"}
        self._anon = self._anon_names(used)

    @staticmethod
    def _anon_names(used):
        i = 0
        while True:
            name = f"_A{i}"
            if name not in used:
                yield name
            i += 1

    def peek(self) -> _Token:
        return self.toks[self.i]

    def next(self) -> _Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Token:
        t = self.next()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text or 'end of input'!r}",
                             t.span)
        return t

    # -- terms --------------------------------------------------------------

    def term(self) -> Term:
        return self.union_term()

    def union_term(self) -> Term:
        left = self.field_term()
        if self.peek().kind == "union":
            op = self.next()
            right = self.union_term()  # right-associative
            return Compound(UNION_FUNCTOR, (left, right), op.span)
        return left

    def field_term(self) -> Term:
        left = self.primary()
        if self.peek().text == ":":
            op = self.next()
            right = self.primary()
            return Compound(FIELD_FUNCTOR, (left, right), op.span)
        return left

    def primary(self) -> Term:
        t = self.peek()
        if t.kind == "var":
            self.next()
            if t.text == "_":
                return Var(next(self._anon), t.span)
            return Var(t.text, t.span)
        if t.kind == "int":
            self.next()
            return Compound(t.text, (), t.span)
        if t.kind == "name":
            self.next()
            if self.peek().text == "(":
                self.next()
                args = self.term_list(")")
                return Compound(t.text, tuple(args), t.span)
            return Compound(t.text, (), t.span)
        if t.text == "[":
            return self.list_term()
        if t.text == "(":
            self.next()
            inner = self.term()
            self.expect(")")
            return inner
        raise ParseError(f"expected a term, found {t.text or 'end of input'!r}", t.span)

    def term_list(self, closer: str) -> list:
        args = [self.term()]
        while self.peek().text == ",":
            self.next()
            args.append(self.term())
        self.expect(closer)
        return args

    def list_term(self) -> Term:
        opener = self.expect("[")
        if self.peek().text == "]":
            self.next()
            return Compound("[]", (), opener.span)
        items = [self.term()]
        while self.peek().text == ",":
            self.next()
            items.append(self.term())
        tail: Term = NIL
        if self.peek().text == "|":
            self.next()
            tail = self.term()
        self.expect("]")
        out = tail
        for item in reversed(items):
            out = Compound(LIST_FUNCTOR, (item, out), opener.span)
        return out

    # -- clauses ------------------------------------------------------------

    def atom(self) -> Atom:
        t = self.peek()
        term = self.term()
        if isinstance(term, Var):
            raise ParseError("a goal atom cannot be a variable", t.span)
        return Atom(term.functor, term.args, term.span or t.span)

    def clause(self, idx: int) -> Clause:
        start = self.peek().span
        head = self.atom()
        body: tuple = ()
        if self.peek().kind == "turnstile":
            self.next()
            atoms = [self.atom()]
            while self.peek().text == ",":
                self.next()
                atoms.append(self.atom())
            body = tuple(atoms)
        self.expect(".")
        return Clause(head, body, idx, start)

    def program(self) -> Program:
        clauses = []
        while self.peek().kind != "eof":
            clauses.append(self.clause(len(clauses) + 1))
        return Program(tuple(clauses))

    def goal(self) -> Goal:
        if self.peek().kind == "query":
            self.next()
        if self.peek().kind == "eof":
            raise ParseError("empty goal", self.peek().span)
        atoms = [self.atom()]
        while self.peek().text == ",":
            self.next()
            atoms.append(self.atom())
        if self.peek().text == ".":
            self.next()
        t = self.peek()
        if t.kind != "eof":
            raise ParseError(f"unexpected {t.text!r} after goal", t.span)
        return Goal(tuple(atoms))


def parse_program(text: str, filename: str = "<string>") -> Program:
    return _Parser(text, filename).program()


def parse_goal(text: str, filename: str = "<goal>") -> Goal:
    return _Parser(text, filename).goal()


def parse_term(text: str, filename: str = "<term>") -> Term:
    p = _Parser(text, filename)
    t = p.term()
    if p.peek().kind != "eof":
        raise ParseError(f"unexpected {p.peek().text!r} after term", p.peek().span)
    return t


# ---------------------------------------------------------------------------
# Printing

_UNION_PRIO = 500
_FIELD_PRIO = 200


def term_text(t: Term, max_prio: int = 1200, nested_lists: bool = False,
              marked: Optional[set] = None) -> str:
    """Render a finite term.

    ``nested_lists`` prints cons cells one pair at a time (``[a|[b|T]]``),
    which is how incremental answers are displayed; otherwise lists print
    compactly (``[a, b|T]``).  Variables whose names are in ``marked`` get a
    trailing ``?``.
    """
    if isinstance(t, Var):
        return t.name + ("?" if marked and t.name in marked else "")
    if t.functor == LIST_FUNCTOR and len(t.args) == 2:
        if nested_lists:
            head = term_text(t.args[0], 999, nested_lists, marked)
            tail = term_text(t.args[1], 999, nested_lists, marked)
            return f"[{head}|{tail}]"
        items = []
        cur: Term = t
        while isinstance(cur, Compound) and cur.functor == LIST_FUNCTOR and len(cur.args) == 2:
            items.append(term_text(cur.args[0], 999, nested_lists, marked))
            cur = cur.args[1]
        if isinstance(cur, Compound) and cur.functor == "[]" and not cur.args:
            return "[" + ", ".join(items) + "]"
        return "[" + ", ".join(items) + "|" + term_text(cur, 999, nested_lists, marked) + "]"
    if t.functor == UNION_FUNCTOR and len(t.args) == 2:
        left = term_text(t.args[0], _UNION_PRIO - 1, nested_lists, marked)
        right = term_text(t.args[1], _UNION_PRIO, nested_lists, marked)
        s = f"{left} \\/ {right}"
        return f"({s})" if _UNION_PRIO > max_prio else s
    if t.functor == FIELD_FUNCTOR and len(t.args) == 2:
        left = term_text(t.args[0], _FIELD_PRIO - 1, nested_lists, marked)
        right = term_text(t.args[1], _FIELD_PRIO - 1, nested_lists, marked)
        s = f"{left}:{right}"
        return f"({s})" if _FIELD_PRIO > max_prio else s
    if not t.args:
        return t.functor
    inner = ", ".join(term_text(a, 999, nested_lists, marked) for a in t.args)
    return f"{t.functor}({inner})"


def atom_text(a: Atom) -> str:
    if not a.args:
        return a.pred
    return f"{a.pred}(" + ", ".join(term_text(x, 999) for x in a.args) + ")"


def clause_text(c: Clause) -> str:
    if not c.body:
        return atom_text(c.head) + "."
    return atom_text(c.head) + " :- " + ", ".join(atom_text(a) for a in c.body) + "."


def program_text(p: Program) -> str:
    return "\n".join(clause_text(c) for c in p.clauses) + "\n"


def goal_text(g: Goal) -> str:
    return "?- " + ", ".join(atom_text(a) for a in g.atoms) + "."


def print_answer(answer, style: str = "flat", unfold: int = 3) -> str:
    """Render an answer's bindings.

    * ``flat``: substitute fully; raises :class:`PrintError` on cyclic
      bindings (use ``mu`` or ``lazy`` for those).
    * ``mu``: one equation per cycle entry, e.g. ``X = cons(0, X)``.
    * ``lazy``: unfold cycles ``unfold`` times, print cons cells pairwise, and
      mark every remaining variable with a trailing ``?``.
    """
    if style not in ("flat", "mu", "lazy"):
        raise ValueError(f"unknown style {style!r}")
    env: BindingEnv = answer.bindings
    parts = []
    for name in answer.goal_vars:
        v = Var(name)
        walked = env.walk(v)
        if isinstance(walked, Var) and walked.name == name:
            continue  # unconstrained
        if style == "flat":
            if has_cycle(env, v):
                raise PrintError(
                    f"{name} is bound to a rational term; "
                    "the flat style cannot print it (use mu or lazy)")
            parts.append(f"{name} = {term_text(resolve(env, v, 1))}")
        elif style == "mu":
            m = to_mu(env, v)
            eqs = dict(m.equations)
            if isinstance(m.root, Var) and m.root.name in eqs:
                first = f"{name} = {term_text(eqs.pop(m.root.name))}" \
                    if m.root.name == name else f"{name} = {term_text(m.root)}"
            else:
                first = f"{name} = {term_text(m.root)}"
            parts.append(first)
            parts.extend(f"{n} = {term_text(rhs)}" for n, rhs in sorted(eqs.items()))
        elif style == "lazy":
            t = resolve(env, v, unfold)
            marked = {x.name for x in term_vars(t)}
            parts.append(f"{name} = {term_text(t, nested_lists=True, marked=marked)}")
    return ", ".join(parts) if parts else "true"


# ---------------------------------------------------------------------------
# Trace lines

_TRACE_RE = re.compile(
    r"#(?P<n>\d+) (?P<kind>sld|hyp|rw|su) clause (?P<clause>\d+) "
    r"atom (?P<atom>\d+) σ=\{(?P<subst>.*)\}$")


def trace_line(n: int, kind: str, clause_id: int, atom_index: int, bindings) -> str:
    subst = ", ".join(f"{name}={term_text(t)}" for name, t in bindings)
    return f"#{n} {kind} clause {clause_id} atom {atom_index} σ={{{subst}}}"


def parse_trace_line(line: str) -> dict:
    m = _TRACE_RE.match(line)
    if m is None:
        raise ParseError(f"bad trace line: {line!r}")
    subst = []
    body = m.group("subst")
    if body:
        for part in _split_top(body):
            name, _, rhs = part.partition("=")
            subst.append((name.strip(), parse_term(rhs.strip())))
    return {
        "n": int(m.group("n")),
        "kind": m.group("kind"),
        "clause": int(m.group("clause")),
        "atom": int(m.group("atom")),
        "subst": subst,
    }


def _split_top(s: str) -> list:
    out, depth, start = [], 0, 0
    for i, ch in enumerate(s):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == "," and depth == 0:
            out.append(s[start:i])
            start = i + 1
    out.append(s[start:])
    return [p for p in (x.strip() for x in out) if p]
