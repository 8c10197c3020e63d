"""Parser and AST for the untyped class-based mini-language (``.moo`` files).

The surface syntax is Java-like but carries no type annotations::

    class NEList extends Object {
        head;
        tail;
        NEList(head, tail) {
            super();
            this.head = head;
            this.tail = tail;
        }
        addLast(elem) {
            new NEList(this.head, this.tail.addLast(elem))
        }
    }

A class declares fields, one constructor (whose body is a ``super(...)``
call followed by ``this.f = e;`` assignments covering each declared field
exactly once, in declaration order), and methods whose bodies are single
expressions.  ``//`` starts a line comment.

Identifiers are case-insensitive and are stored lowercased, which is also
how they end up in compiled logic programs (``EList`` becomes the constant
``elist``).  ``object`` is the implicit inheritance root and cannot be
declared.  Parents that are neither declared nor ``object`` are allowed;
resolution against them simply fails at query time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from hornlog.terms import SourceSpan


class MooError(Exception):
    """Syntax or well-formedness error in mini-language source."""

    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.span = span
        super().__init__(f"{span}: {message}" if span else message)


# ---------------------------------------------------------------------------
# Expressions
#
# The ``span`` field never takes part in equality, so two parses of the same
# source compare equal even though their positions differ.

@dataclass(frozen=True)
class Var:
    name: str
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Null:
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class This:
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class New:
    cls: str
    args: tuple
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class FieldAcc:
    target: "Expr"
    fld: str
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Invoke:
    target: "Expr"
    method: str
    args: tuple
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str  # "<=" or "-"
    lhs: "Expr"
    rhs: "Expr"
    span: Optional[SourceSpan] = field(default=None, compare=False)


Expr = Union[Var, IntLit, BoolLit, Null, This, New, FieldAcc, Invoke, If, BinOp]


# ---------------------------------------------------------------------------
# Declarations

@dataclass(frozen=True)
class Constructor:
    params: tuple
    super_args: tuple
    assigns: tuple  # ((field name, Expr), ...) in source order
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class MethodDecl:
    name: str
    params: tuple
    body: Expr
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class ClassDecl:
    name: str
    parent: str
    fields: tuple
    ctor: Constructor
    methods: dict  # name -> MethodDecl, declaration order
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class ClassTable:
    classes: dict  # name -> ClassDecl, declaration order

    def __contains__(self, name: str) -> bool:
        return name in self.classes

    def decl(self, name: str) -> ClassDecl:
        return self.classes[name]

    def fields_of(self, name: str) -> tuple:
        """All fields of ``name`` including inherited ones, root first.

        The chain stops at ``object`` or at an undeclared parent, which
        contributes no fields.
        """
        chain = []
        cur = name
        while cur in self.classes:
            chain.append(self.classes[cur])
            cur = chain[-1].parent
        out: list = []
        for decl in reversed(chain):
            out.extend(decl.fields)
        return tuple(out)


# ---------------------------------------------------------------------------
# Tokenizer

_KEYWORDS = frozenset(
    ["class", "extends", "new", "this", "super", "if", "else",
     "true", "false", "null"])

_MOO_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>//[^\n]*)
      | (?P<le><=)
      | (?P<int>\d+)
      | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
      | (?P<punct>[{}();,.=\-])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str  # keyword | ident | int | punct | eof
    text: str
    span: SourceSpan


def _tokenize(text: str, filename: str) -> list:
    out = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _MOO_TOKEN_RE.match(text, pos)
        if m is None:
            raise MooError(f"unexpected character {text[pos]!r}",
                           SourceSpan(filename, line, col, 1))
        kind, tok = m.lastgroup, m.group()
        if kind not in ("ws", "comment"):
            span = SourceSpan(filename, line, col, len(tok))
            if kind == "ident":
                tok = tok.lower()
                kind = "keyword" if tok in _KEYWORDS else "ident"
            elif kind == "le":
                kind = "punct"
            out.append(_Tok(kind, tok, span))
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()
    out.append(_Tok("eof", "", SourceSpan(filename, line, col, 0)))
    return out


# ---------------------------------------------------------------------------
# Parser

class _MooParser:
    def __init__(self, text: str, filename: str):
        self.toks = _tokenize(text, filename)
        self.i = 0

    def peek(self, ahead: int = 0) -> _Tok:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            raise MooError(
                f"expected {text!r}, found {t.text or 'end of input'!r}",
                t.span)
        return t

    def ident(self, what: str) -> _Tok:
        t = self.next()
        if t.kind != "ident":
            raise MooError(
                f"expected {what}, found {t.text or 'end of input'!r}", t.span)
        return t

    # -- expressions --------------------------------------------------------

    def expr(self) -> Expr:
        t = self.peek()
        if t.text == "if":
            self.next()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.expr()
            self.expect("else")
            orelse = self.expr()
            return If(cond, then, orelse, t.span)
        return self.cmp()

    def cmp(self) -> Expr:
        left = self.additive()
        if self.peek().text == "<=":
            op = self.next()
            right = self.additive()
            return BinOp("<=", left, right, op.span)
        return left

    def additive(self) -> Expr:
        left = self.postfix()
        while self.peek().text == "-":
            op = self.next()
            right = self.postfix()
            left = BinOp("-", left, right, op.span)
        return left

    def postfix(self) -> Expr:
        e = self.primary()
        while self.peek().text == ".":
            self.next()
            name = self.ident("field or method name")
            if self.peek().text == "(":
                self.next()
                args = self.call_args()
                e = Invoke(e, name.text, tuple(args), name.span)
            else:
                e = FieldAcc(e, name.text, name.span)
        return e

    def primary(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return IntLit(int(t.text), t.span)
        if t.text == "true" or t.text == "false":
            self.next()
            return BoolLit(t.text == "true", t.span)
        if t.text == "null":
            self.next()
            return Null(t.span)
        if t.text == "this":
            self.next()
            return This(t.span)
        if t.text == "new":
            self.next()
            cls = self.ident("class name")
            self.expect("(")
            args = self.call_args()
            return New(cls.text, tuple(args), t.span)
        if t.kind == "ident":
            self.next()
            return Var(t.text, t.span)
        if t.text == "(":
            self.next()
            inner = self.expr()
            self.expect(")")
            return inner
        raise MooError(
            f"expected an expression, found {t.text or 'end of input'!r}",
            t.span)

    def call_args(self) -> list:
        if self.peek().text == ")":
            self.next()
            return []
        args = [self.expr()]
        while self.peek().text == ",":
            self.next()
            args.append(self.expr())
        self.expect(")")
        return args

    def param_list(self) -> tuple:
        self.expect("(")
        if self.peek().text == ")":
            self.next()
            return ()
        names = [self.ident("parameter name")]
        while self.peek().text == ",":
            self.next()
            names.append(self.ident("parameter name"))
        self.expect(")")
        seen = set()
        for tok in names:
            if tok.text in seen:
                raise MooError(f"duplicate parameter {tok.text!r}", tok.span)
            seen.add(tok.text)
        return tuple(tok.text for tok in names)

    # -- declarations -------------------------------------------------------

    def class_decl(self) -> ClassDecl:
        start = self.expect("class")
        name = self.ident("class name")
        if name.text == "object":
            raise MooError("class name 'object' is reserved (implicit root)",
                           name.span)
        parent = "object"
        if self.peek().text == "extends":
            self.next()
            parent = self.ident("parent class name").text
        self.expect("{")
        fields: list = []
        ctor: Optional[Constructor] = None
        methods: dict = {}
        while self.peek().text != "}":
            tok = self.ident("member declaration")
            if self.peek().text == ";":  # field
                self.next()
                if tok.text in fields:
                    raise MooError(f"duplicate field {tok.text!r}", tok.span)
                fields.append(tok.text)
            elif tok.text == name.text:  # constructor
                if ctor is not None:
                    raise MooError("duplicate constructor", tok.span)
                ctor = self.constructor(tok)
            else:  # method
                params = self.param_list()
                self.expect("{")
                body = self.expr()
                self.expect("}")
                if tok.text in methods:
                    raise MooError(f"duplicate method {tok.text!r}", tok.span)
                methods[tok.text] = MethodDecl(tok.text, params, body, tok.span)
        self.expect("}")
        if ctor is None:
            ctor = Constructor((), (), (), name.span)
        _check_assignments(tuple(fields), ctor, name)
        return ClassDecl(name.text, parent, tuple(fields), ctor, methods,
                         start.span)

    def constructor(self, name_tok: _Tok) -> Constructor:
        params = self.param_list()
        self.expect("{")
        self.expect("super")
        self.expect("(")
        super_args = tuple(self.call_args())
        self.expect(";")
        assigns = []
        while self.peek().text == "this":
            self.next()
            self.expect(".")
            fld_tok = self.ident("field name")
            self.expect("=")
            rhs = self.expr()
            self.expect(";")
            assigns.append((fld_tok.text, rhs, fld_tok.span))
        self.expect("}")
        return Constructor(params, super_args,
                           tuple((f, e) for f, e, _ in assigns),
                           name_tok.span)

    def class_table(self) -> ClassTable:
        classes: dict = {}
        while self.peek().kind != "eof":
            decl = self.class_decl()
            if decl.name in classes:
                raise MooError(f"duplicate class {decl.name!r}", decl.span)
            classes[decl.name] = decl
        table = ClassTable(classes)
        _check_cycles(table)
        return table


def _check_assignments(fields: tuple, ctor: Constructor, name_tok: _Tok):
    """The constructor must assign each declared field exactly once, in
    declaration order."""
    assigned = [f for f, _ in ctor.assigns]
    for f in assigned:
        if f not in fields:
            raise MooError(f"constructor assigns undeclared field {f!r}",
                           ctor.span)
    if len(set(assigned)) != len(assigned):
        dup = next(f for i, f in enumerate(assigned) if f in assigned[:i])
        raise MooError(f"field {dup!r} assigned more than once", ctor.span)
    for f in fields:
        if f not in assigned:
            raise MooError(
                f"field {f!r} of class {name_tok.text!r} is never assigned",
                ctor.span)
    if list(fields) != assigned:
        raise MooError("constructor assignments out of declaration order",
                       ctor.span)


def _check_cycles(table: ClassTable):
    for name, decl in table.classes.items():
        seen = {name}
        cur = decl.parent
        while cur in table.classes:
            if cur in seen:
                raise MooError(f"inheritance cycle through class {name!r}",
                               decl.span)
            seen.add(cur)
            cur = table.classes[cur].parent


def parse_classes(text: str, filename: str = "<moo>") -> ClassTable:
    return _MooParser(text, filename).class_table()


def parse_expr(text: str, filename: str = "<expr>") -> Expr:
    p = _MooParser(text, filename)
    e = p.expr()
    t = p.peek()
    if t.kind != "eof":
        raise MooError(f"unexpected {t.text!r} after expression", t.span)
    return e


# ---------------------------------------------------------------------------
# Printing
#
# Precedence levels for parenthesization: if (0) < <= (1) < - (2) < postfix.

def expr_text(e: Expr, prec: int = 0) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Null):
        return "null"
    if isinstance(e, This):
        return "this"
    if isinstance(e, New):
        return f"new {e.cls}(" + ", ".join(expr_text(a) for a in e.args) + ")"
    if isinstance(e, FieldAcc):
        return expr_text(e.target, 3) + "." + e.fld
    if isinstance(e, Invoke):
        args = ", ".join(expr_text(a) for a in e.args)
        return f"{expr_text(e.target, 3)}.{e.method}({args})"
    if isinstance(e, If):
        s = (f"if ({expr_text(e.cond)}) {expr_text(e.then, 1)} "
             f"else {expr_text(e.orelse)}")
        return f"({s})" if prec > 0 else s
    if isinstance(e, BinOp):
        mine = 1 if e.op == "<=" else 2
        s = f"{expr_text(e.lhs, mine)} {e.op} {expr_text(e.rhs, mine + 1)}"
        return f"({s})" if prec > mine else s
    raise TypeError(f"not an expression node: {e!r}")


def class_table_text(ct: ClassTable) -> str:
    out = []
    for decl in ct.classes.values():
        out.append(f"class {decl.name} extends {decl.parent} {{")
        for f in decl.fields:
            out.append(f"    {f};")
        c = decl.ctor
        args = ", ".join(expr_text(a) for a in c.super_args)
        out.append(f"    {decl.name}({', '.join(c.params)}) {{")
        out.append(f"        super({args});")
        for f, rhs in c.assigns:
            out.append(f"        this.{f} = {expr_text(rhs)};")
        out.append("    }")
        for m in decl.methods.values():
            out.append(f"    {m.name}({', '.join(m.params)}) {{")
            out.append(f"        {expr_text(m.body)}")
            out.append("    }")
        out.append("}")
    return "\n".join(out) + ("\n" if out else "")
