import pytest

from hornlog.minioo import (
    BinOp,
    BoolLit,
    FieldAcc,
    If,
    IntLit,
    Invoke,
    MooError,
    New,
    Null,
    This,
    Var,
    class_table_text,
    expr_text,
    parse_classes,
    parse_expr,
)

LISTS_SRC = """
class EList extends Object {
    EList() {
        super();
    }
    addLast(elem) {
        new NEList(elem, this)
    }
}

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
"""

LISTFACT_SRC = """
class ListFact extends Object {
    ListFact() { super(); }
    replicate(n, x) {
        if (n <= 0) new EList()
        else new NEList(x, this.replicate(n-1, x))
    }
    buildList(n, acc) {
        if (n <= 0) acc
        else this.buildList(n-1, new NEList(n, acc))
    }
}
"""


def test_parse_linked_lists():
    ct = parse_classes(LISTS_SRC)
    assert list(ct.classes) == ["elist", "nelist"]
    nelist = ct.decl("nelist")
    assert nelist.fields == ("head", "tail")
    assert nelist.parent == "object"
    assert nelist.ctor.params == ("head", "tail")
    assert nelist.ctor.super_args == ()
    assert nelist.ctor.assigns == (("head", Var("head")), ("tail", Var("tail")))
    assert list(nelist.methods) == ["addlast"]


def test_elist_addlast_body():
    ct = parse_classes(LISTS_SRC)
    body = ct.decl("elist").methods["addlast"].body
    assert body == New("nelist", (Var("elem"), This()))


def test_nelist_addlast_body():
    ct = parse_classes(LISTS_SRC)
    body = ct.decl("nelist").methods["addlast"].body
    assert body == New("nelist", (
        FieldAcc(This(), "head"),
        Invoke(FieldAcc(This(), "tail"), "addlast", (Var("elem"),)),
    ))


def test_parse_replicate_if():
    ct = parse_classes(LISTFACT_SRC)
    body = ct.decl("listfact").methods["replicate"].body
    assert body == If(
        BinOp("<=", Var("n"), IntLit(0)),
        New("elist", ()),
        New("nelist", (Var("x"), Invoke(This(), "replicate",
                                        (BinOp("-", Var("n"), IntLit(1)),
                                         Var("x"))))),
    )


def test_parse_expr_examples():
    assert parse_expr("new EList().addLast(42)") == \
        Invoke(New("elist", ()), "addlast", (IntLit(42),))
    assert parse_expr("x.addLast(y)") == \
        Invoke(Var("x"), "addlast", (Var("y"),))
    assert parse_expr("this") == This()
    assert parse_expr("null") == Null()
    assert parse_expr("true") == BoolLit(True)


def test_minus_is_left_associative():
    assert parse_expr("n - 1 - 2") == \
        BinOp("-", BinOp("-", Var("n"), IntLit(1)), IntLit(2))


def test_fields_of_follows_inheritance():
    ct = parse_classes(LISTS_SRC + """
class Cons extends NEList {
    extra;
    Cons(h, t, e) {
        super(h, t);
        this.extra = e;
    }
}
""")
    assert ct.fields_of("cons") == ("head", "tail", "extra")
    assert ct.decl("cons").ctor.super_args == (Var("h"), Var("t"))


def test_empty_input_yields_empty_table():
    assert parse_classes("").classes == {}


def test_roundtrip_through_printer():
    for src in (LISTS_SRC, LISTFACT_SRC):
        ct = parse_classes(src)
        assert parse_classes(class_table_text(ct)) == ct
    e = parse_expr("if (n <= 0) acc else this.buildList(n-1, new NEList(n, acc))")
    assert parse_expr(expr_text(e)) == e


@pytest.mark.parametrize("src, message", [
    ("class A extends A { A() { super(); } }", "inheritance cycle"),
    ("class A extends B {} class B extends A {}", "inheritance cycle"),
    ("class A {} class A {}", "duplicate class"),
    ("class Object {}", "reserved"),
    ("class A { f; A() { super(); } }", "never assigned"),
    ("class A { f; g; A(x) { super(); this.g = x; this.f = x; } }",
     "out of declaration order"),
    ("class A { f; A(x) { super(); this.f = x; this.f = x; } }",
     "more than once"),
    ("class A { A(x) { super(); this.f = x; } }", "undeclared field"),
    ("class A { m(x, x) { x } }", "duplicate parameter"),
    ("class A { m(x) { x } m(y) { y } }", "duplicate method"),
    ("class A { f; f; A() { super(); } }", "duplicate field"),
    ("class A { A() { super(); } A() { super(); } }", "duplicate constructor"),
])
def test_table_validation_errors(src, message):
    with pytest.raises(MooError, match=message):
        parse_classes(src)


def test_errors_carry_spans_in_bounds():
    src = "class A {\n  m() { 1 +++ 2 }\n}"
    with pytest.raises(MooError) as exc:
        parse_classes(src)
    span = exc.value.span
    assert span is not None
    lines = src.split("\n")
    assert 1 <= span.line <= len(lines)
    assert 1 <= span.column <= len(lines[span.line - 1]) + 1


def test_unknown_parent_is_allowed():
    ct = parse_classes("class A extends Mystery { A() { super(); } }")
    assert ct.decl("a").parent == "mystery"
    assert ct.fields_of("a") == ()


def test_comments_and_case_folding():
    ct = parse_classes("""
// heterogeneous container
class Box {  // no explicit parent: object is implied
    Item;
    BOX(item) { super(); this.ITEM = item; }
}
""")
    assert ct.decl("box").fields == ("item",)
    assert ct.decl("box").parent == "object"
