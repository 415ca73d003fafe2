"""Propositional constraints over (hole = option) atoms.

Formulas restrict which hole assignments count as realisations.  The textual
form is an s-expression, e.g. ``(=> (or (= k2 2) (= k2 3)) (not (= k3 2)))``.
"""

from __future__ import annotations

from dataclasses import dataclass


class ConstraintError(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    hole: str
    option: str

    def eval(self, assignment):
        return assignment[self.hole] == self.option

    def holes(self):
        return {self.hole}

    def to_sexpr(self):
        return "(= %s %s)" % (self.hole, self.option)


@dataclass(frozen=True)
class Not:
    arg: object

    def eval(self, assignment):
        return not self.arg.eval(assignment)

    def holes(self):
        return self.arg.holes()

    def to_sexpr(self):
        return "(not %s)" % self.arg.to_sexpr()


@dataclass(frozen=True)
class And:
    args: tuple

    def eval(self, assignment):
        return all(a.eval(assignment) for a in self.args)

    def holes(self):
        return set().union(*(a.holes() for a in self.args)) if self.args else set()

    def to_sexpr(self):
        return "(and %s)" % " ".join(a.to_sexpr() for a in self.args)


@dataclass(frozen=True)
class Or:
    args: tuple

    def eval(self, assignment):
        return any(a.eval(assignment) for a in self.args)

    def holes(self):
        return set().union(*(a.holes() for a in self.args)) if self.args else set()

    def to_sexpr(self):
        return "(or %s)" % " ".join(a.to_sexpr() for a in self.args)


@dataclass(frozen=True)
class Implies:
    lhs: object
    rhs: object

    def eval(self, assignment):
        return (not self.lhs.eval(assignment)) or self.rhs.eval(assignment)

    def holes(self):
        return self.lhs.holes() | self.rhs.holes()

    def to_sexpr(self):
        return "(=> %s %s)" % (self.lhs.to_sexpr(), self.rhs.to_sexpr())


def _tokenize(text):
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _parse(tokens, pos):
    if pos >= len(tokens):
        raise ConstraintError("unexpected end of constraint")
    tok = tokens[pos]
    if tok != "(":
        raise ConstraintError("expected '(' in constraint, got %r" % tok)
    head = tokens[pos + 1]
    pos += 2
    if head == "=":
        hole, option = tokens[pos], tokens[pos + 1]
        pos += 2
        node = Atom(hole, option)
    elif head == "not":
        arg, pos = _parse(tokens, pos)
        node = Not(arg)
    elif head == "=>":
        lhs, pos = _parse(tokens, pos)
        rhs, pos = _parse(tokens, pos)
        node = Implies(lhs, rhs)
    elif head in ("and", "or"):
        args = []
        while pos < len(tokens) and tokens[pos] == "(":
            arg, pos = _parse(tokens, pos)
            args.append(arg)
        node = And(tuple(args)) if head == "and" else Or(tuple(args))
    else:
        raise ConstraintError("unknown constraint operator %r" % head)
    if pos >= len(tokens) or tokens[pos] != ")":
        raise ConstraintError("expected ')' in constraint")
    return node, pos + 1


def parse_sexpr(text: str):
    tokens = _tokenize(text)
    node, pos = _parse(tokens, 0)
    if pos != len(tokens):
        raise ConstraintError("trailing tokens in constraint: %r" % tokens[pos:])
    return node
