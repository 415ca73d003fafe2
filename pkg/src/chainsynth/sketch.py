"""Parser and elaborator for the guarded-command sketch language.

A sketch declares holes (finite option lists, optionally named and costed),
propositional constraints over option names, and a single module of bounded
integer variables plus probabilistic guarded commands.  Hole references are
written ``@name@`` and may appear wherever an integer expression is expected.
Elaboration explores the union of the state spaces of all realisations and
produces a :class:`~chainsynth.family.Family`.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Optional

from . import constraints as cn
from .family import Family, FamilyError, Fixed, Hole, HoleRef

DEFAULT_MAX_STATES = 10 ** 6

KEYWORDS = {"hole", "either", "is", "cost", "constraint",
            "module", "endmodule", "init"}

_TOKEN_RE = re.compile(r"""
      (?P<ws>[ \t\r]+)
    | (?P<comment>//[^\n]*)
    | (?P<nl>\n)
    | (?P<holeref>@[A-Za-z_][A-Za-z0-9_]*@)
    | (?P<number>\d+\.\d+|\d+)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<op>->|=>|\.\.|<=|>=|!=|[{}\[\],;:'&|!+\-*=<>()])
""", re.VERBOSE)


class SketchError(ValueError):
    def __init__(self, message, line=None, col=None):
        if line is not None:
            message = "%d:%d: %s" % (line, col, message)
        super().__init__(message)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # "number" | "ident" | "holeref" | "op" | "eof"
    text: str
    line: int
    col: int


def _lex(text: str):
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise SketchError("unexpected character %r" % text[pos], line, col)
        kind = m.lastgroup
        tok = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(tok)
        else:
            if kind == "holeref":
                tokens.append(Token("holeref", tok[1:-1], line, col))
            else:
                tokens.append(Token(kind, tok, line, col))
            col += len(tok)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# expressions

BOOL_OPS = {"&", "|", "=>", "=", "!=", "<", "<=", ">", ">="}
CMP_OPS = {"=", "!=", "<", "<=", ">", ">="}


@dataclass(frozen=True)
class Num:
    value: float
    text: str

    def to_text(self):
        return self.text


@dataclass(frozen=True)
class Var:
    name: str

    def to_text(self):
        return self.name


@dataclass(frozen=True)
class HoleE:
    name: str

    def to_text(self):
        return "@%s@" % self.name


@dataclass(frozen=True)
class Bin:
    op: str
    lhs: object
    rhs: object

    def to_text(self):
        return "(%s %s %s)" % (self.lhs.to_text(), self.op, self.rhs.to_text())


@dataclass(frozen=True)
class Un:
    op: str
    arg: object

    def to_text(self):
        return "%s(%s)" % (self.op, self.arg.to_text())


def holes_in(expr) -> set:
    if isinstance(expr, HoleE):
        return {expr.name}
    if isinstance(expr, Bin):
        return holes_in(expr.lhs) | holes_in(expr.rhs)
    if isinstance(expr, Un):
        return holes_in(expr.arg)
    return set()


def vars_in(expr) -> set:
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Bin):
        return vars_in(expr.lhs) | vars_in(expr.rhs)
    if isinstance(expr, Un):
        return vars_in(expr.arg)
    return set()


def eval_expr(expr, valuation, assignment=None, holes_by_name=None):
    """Evaluate an expression; hole references resolve through `assignment`
    (hole name -> option label) to the option's expression."""
    if isinstance(expr, Num):
        return int(expr.value) if expr.value == int(expr.value) else expr.value
    if isinstance(expr, Var):
        if expr.name not in valuation:
            raise SketchError("unknown identifier %r" % expr.name)
        return valuation[expr.name]
    if isinstance(expr, HoleE):
        if not assignment or expr.name not in assignment:
            raise SketchError("hole %s is unassigned" % expr.name)
        decl = holes_by_name[expr.name]
        option = decl.option(assignment[expr.name])
        return eval_expr(option.expr, valuation, assignment, holes_by_name)
    if isinstance(expr, Un):
        v = eval_expr(expr.arg, valuation, assignment, holes_by_name)
        return (not v) if expr.op == "!" else -v
    l = eval_expr(expr.lhs, valuation, assignment, holes_by_name)
    r = eval_expr(expr.rhs, valuation, assignment, holes_by_name)
    op = expr.op
    if op == "+":
        return l + r
    if op == "-":
        return l - r
    if op == "*":
        return l * r
    if op == "=":
        return l == r
    if op == "!=":
        return l != r
    if op == "<":
        return l < r
    if op == "<=":
        return l <= r
    if op == ">":
        return l > r
    if op == ">=":
        return l >= r
    if op == "&":
        return bool(l) and bool(r)
    if op == "|":
        return bool(l) or bool(r)
    if op == "=>":
        return (not l) or bool(r)
    raise SketchError("unknown operator %r" % op)


# ---------------------------------------------------------------------------
# program AST


@dataclass(frozen=True)
class OptionDecl:
    label: str  # explicit name, or the option expression's source text
    expr: object
    cost: int
    named: bool


@dataclass(frozen=True)
class HoleDecl:
    name: str
    options: tuple  # tuple[OptionDecl, ...]
    line: int = 0

    def option(self, label: str) -> OptionDecl:
        for o in self.options:
            if o.label == label:
                return o
        raise SketchError("hole %s has no option %r" % (self.name, label))


@dataclass(frozen=True)
class VarDecl:
    name: str
    lo: int
    hi: int
    init: int
    line: int = 0


@dataclass(frozen=True)
class Command:
    guard: object
    branches: tuple  # tuple[(prob_expr, update), ...]; update = tuple[(var, expr), ...]
    line: int = 0


@dataclass(frozen=True)
class SketchProgram:
    holes: tuple
    constraints: tuple  # boolean Exprs over option names
    module_name: str
    variables: tuple  # tuple[VarDecl, ...]
    commands: tuple


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead=0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, text) -> Token:
        tok = self.next()
        if tok.text != text:
            raise SketchError("expected %r, got %r" % (text, tok.text or "<eof>"),
                              tok.line, tok.col)
        return tok

    def accept(self, text) -> bool:
        if self.peek().text == text and self.peek().kind != "eof":
            self.pos += 1
            return True
        return False

    def error(self, msg):
        tok = self.peek()
        raise SketchError(msg, tok.line, tok.col)

    # expressions; precedence: => | & ! cmp additive multiplicative unary
    def expr(self):
        lhs = self.or_expr()
        if self.accept("=>"):
            return Bin("=>", lhs, self.expr())
        return lhs

    def or_expr(self):
        lhs = self.and_expr()
        while self.accept("|"):
            lhs = Bin("|", lhs, self.and_expr())
        return lhs

    def and_expr(self):
        lhs = self.not_expr()
        while self.accept("&"):
            lhs = Bin("&", lhs, self.not_expr())
        return lhs

    def not_expr(self):
        if self.accept("!"):
            return Un("!", self.not_expr())
        return self.cmp_expr()

    def cmp_expr(self):
        lhs = self.arith()
        if self.peek().text in CMP_OPS and self.peek().kind == "op":
            op = self.next().text
            return Bin(op, lhs, self.arith())
        return lhs

    def arith(self, branch_lookahead=False):
        lhs = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            if branch_lookahead and self.peek().text == "+" \
                    and self._plus_starts_branch():
                break
            op = self.next().text
            lhs = Bin(op, lhs, self.term())
        return lhs

    def _plus_starts_branch(self):
        # inside an update the `+` may separate branches: `... + 0.5: s'=...`
        save = self.pos
        try:
            self.next()  # '+'
            self.arith(branch_lookahead=True)
            return self.peek().text == ":"
        finally:
            self.pos = save

    def term(self):
        lhs = self.unary()
        while self.accept("*"):
            lhs = Bin("*", lhs, self.unary())
        return lhs

    def unary(self):
        if self.accept("-"):
            return Un("-", self.unary())
        return self.atom()

    def atom(self):
        tok = self.peek()
        if tok.kind == "number":
            self.next()
            return Num(float(tok.text), tok.text)
        if tok.kind == "holeref":
            self.next()
            return HoleE(tok.text)
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.next()
            return Var(tok.text)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.error("expected expression, got %r" % (tok.text or "<eof>"))

    # program structure
    def program(self) -> SketchProgram:
        holes = []
        seen_names = set()
        while self.peek().text == "hole":
            holes.append(self.hole_decl(seen_names))
        constraints = []
        while self.peek().text == "constraint":
            self.next()
            constraints.append(self.expr())
        self.expect("module")
        name_tok = self.next()
        if name_tok.kind != "ident":
            raise SketchError("expected module name", name_tok.line, name_tok.col)
        variables = []
        while self.peek().kind == "ident" and self.peek(1).text == ":":
            variables.append(self.var_decl())
        commands = []
        while self.peek().text != "endmodule":
            if self.peek().kind == "eof":
                self.error("missing endmodule")
            commands.append(self.command())
        self.expect("endmodule")
        if self.peek().kind != "eof":
            self.error("trailing input after endmodule")
        return SketchProgram(tuple(holes), tuple(constraints), name_tok.text,
                             tuple(variables), tuple(commands))

    def hole_decl(self, seen_names) -> HoleDecl:
        start = self.expect("hole")
        tok = self.next()
        if tok.kind not in ("ident", "holeref"):
            raise SketchError("expected hole name", tok.line, tok.col)
        name = tok.text
        if name in seen_names:
            raise SketchError("duplicate hole name %r" % name, tok.line, tok.col)
        seen_names.add(name)
        self.expect("either")
        self.expect("{")
        options = []
        while True:
            options.append(self.option_decl())
            if not self.accept(","):
                break
        self.expect("}")
        labels = [o.label for o in options]
        if len(set(labels)) != len(labels):
            raise SketchError("hole %s has duplicate option labels" % name,
                              start.line, start.col)
        return HoleDecl(name, tuple(options), start.line)

    def option_decl(self) -> OptionDecl:
        named = self.peek().kind == "ident" and self.peek().text not in KEYWORDS \
            and self.peek(1).text == "is"
        label = None
        if named:
            label = self.next().text
            self.expect("is")
        expr = self.arith()
        cost = 0
        if self.accept("cost"):
            cost_expr = self.arith()
            cost = eval_expr(cost_expr, {})
            if not isinstance(cost, int) or cost < 0:
                self.error("option cost must be a natural number")
        return OptionDecl(label if named else expr.to_text().strip("()"),
                          expr, cost, named)

    def var_decl(self) -> VarDecl:
        name_tok = self.next()
        self.expect(":")
        self.expect("[")
        lo = self._int()
        self.expect("..")
        hi = self._int()
        self.expect("]")
        self.expect("init")
        init = self._int()
        self.expect(";")
        if hi < lo:
            raise SketchError("variable %s has empty bounds" % name_tok.text,
                              name_tok.line, name_tok.col)
        if not (lo <= init <= hi):
            raise SketchError("initial value of %s outside bounds" % name_tok.text,
                              name_tok.line, name_tok.col)
        return VarDecl(name_tok.text, lo, hi, init, name_tok.line)

    def _int(self) -> int:
        neg = self.accept("-")
        tok = self.next()
        if tok.kind != "number" or "." in tok.text:
            raise SketchError("expected integer, got %r" % tok.text,
                              tok.line, tok.col)
        return -int(tok.text) if neg else int(tok.text)

    def command(self) -> Command:
        start = self.peek()
        guard = self.expr()
        self.expect("->")
        branches = [self.branch()]
        while self.accept("+"):
            branches.append(self.branch())
        self.expect(";")
        return Command(guard, tuple(branches), start.line)

    def branch(self):
        prob = self.arith()
        self.expect(":")
        update = [self.assignment()]
        while self.peek().text == "&" and self.peek(1).kind == "ident" \
                and self.peek(2).text == "'":
            self.next()
            update.append(self.assignment())
        return (prob, tuple(update))

    def assignment(self):
        tok = self.next()
        if tok.kind != "ident":
            raise SketchError("expected variable in update", tok.line, tok.col)
        self.expect("'")
        self.expect("=")
        rhs = self.arith(branch_lookahead=True)
        return (tok.text, rhs)


def parse(text: str) -> SketchProgram:
    """Parse sketch text into an AST; raises SketchError with line/column."""
    return _Parser(_lex(text)).program()


def pretty_print(prog: SketchProgram) -> str:
    lines = []
    for h in prog.holes:
        opts = []
        for o in h.options:
            s = "%s is %s" % (o.label, o.expr.to_text()) if o.named \
                else o.expr.to_text()
            if o.cost:
                s += " cost %d" % o.cost
            opts.append(s)
        lines.append("hole %s either { %s }" % (h.name, ", ".join(opts)))
    for c in prog.constraints:
        lines.append("constraint %s" % c.to_text())
    lines.append("module %s" % prog.module_name)
    for v in prog.variables:
        lines.append("%s : [%d..%d] init %d;" % (v.name, v.lo, v.hi, v.init))
    for cmd in prog.commands:
        branches = " + ".join(
            "%s: %s" % (p.to_text(),
                        " & ".join("%s'=%s" % (var, e.to_text())
                                   for var, e in upd))
            for p, upd in cmd.branches)
        lines.append("%s -> %s;" % (cmd.guard.to_text(), branches))
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# elaboration


def _reduce_table(hole_names, table):
    """Drop holes whose options never change the successor."""
    names = list(hole_names)
    changed = True
    while changed and names:
        changed = False
        for i in range(len(names)):
            groups = {}
            ok = True
            for combo, succ in table.items():
                rest = combo[:i] + combo[i + 1:]
                if rest in groups and groups[rest] != succ:
                    ok = False
                    break
                groups[rest] = succ
            if ok:
                names.pop(i)
                table = groups
                changed = True
                break
    return tuple(names), table


def elaborate(prog: SketchProgram, max_states: int = DEFAULT_MAX_STATES) -> Family:
    """Build the family of MCs described by a sketch.

    The state space is the union over all realisations of the valuations
    reachable from the initial valuation.  Exactly one command must be
    enabled per state (per guard-hole option combination); commands that
    compete under different hole options must agree on their branch
    probabilities so the family's per-state distribution is well defined.
    """
    holes_by_name = {h.name: h for h in prog.holes}
    # option names must be unique program-wide when present
    seen_labels = {}
    for h in prog.holes:
        for o in h.options:
            if o.named:
                if o.label in seen_labels:
                    raise SketchError("option name %r declared twice" % o.label)
                seen_labels[o.label] = (h.name, o.label)
    if not prog.variables:
        raise SketchError("module declares no variables")
    var_names = tuple(v.name for v in prog.variables)
    bounds = {v.name: (v.lo, v.hi) for v in prog.variables}

    for h in prog.holes:
        for o in h.options:
            bad = vars_in(o.expr) - set(var_names)
            if bad:
                raise SketchError("hole %s option uses unknown identifier %r"
                                  % (h.name, bad.pop()), h.line, 0)
    guard_holes = []
    branch_probs = []
    for cmd in prog.commands:
        bad = vars_in(cmd.guard) - set(var_names)
        if bad:
            raise SketchError("unknown identifier %r in guard" % bad.pop(),
                              cmd.line, 0)
        for h in holes_in(cmd.guard) | {h for _, upd in cmd.branches
                                        for _, e in upd for h in holes_in(e)}:
            if h not in holes_by_name:
                raise SketchError("unknown hole @%s@" % h, cmd.line, 0)
        guard_holes.append(sorted(holes_in(cmd.guard),
                                  key=lambda n: list(holes_by_name).index(n)))
        probs = []
        for p_expr, upd in cmd.branches:
            if holes_in(p_expr):
                raise SketchError("hole in probability expression", cmd.line, 0)
            if vars_in(p_expr):
                raise SketchError("probability expression must be constant",
                                  cmd.line, 0)
            probs.append(float(eval_expr(p_expr, {})))
            for var, _ in upd:
                if var not in bounds:
                    raise SketchError("update writes unknown variable %r" % var,
                                      cmd.line, 0)
        if abs(sum(probs) - 1.0) > 1e-9:
            raise SketchError("branch probabilities sum to %r" % sum(probs),
                              cmd.line, 0)
        branch_probs.append(probs)

    all_guard_holes = sorted({h for ghs in guard_holes for h in ghs},
                             key=lambda n: list(holes_by_name).index(n))
    hole_order = {name: i for i, name in enumerate(holes_by_name)}

    def option_labels(name):
        return [o.label for o in holes_by_name[name].options]

    init_valuation = tuple(v.init for v in prog.variables)
    index = {init_valuation: 0}
    valuations = [init_valuation]
    rows = []
    frontier = 0
    while frontier < len(valuations):
        vals = valuations[frontier]
        frontier += 1
        v = dict(zip(var_names, vals))

        def enabled_under(combo_assignment):
            hits = [i for i, cmd in enumerate(prog.commands)
                    if eval_expr(cmd.guard, v, combo_assignment, holes_by_name)]
            if len(hits) > 1:
                raise SketchError(
                    "commands on lines %s overlap in state %s"
                    % (", ".join(str(prog.commands[i].line) for i in hits),
                       _valname(var_names, vals)))
            if not hits:
                raise SketchError("no command enabled in state %s"
                                  % _valname(var_names, vals))
            return hits[0]

        if all_guard_holes:
            combos = list(itertools.product(
                *(option_labels(n) for n in all_guard_holes)))
            cmd_of = {c: enabled_under(dict(zip(all_guard_holes, c)))
                      for c in combos}
            cmds = sorted(set(cmd_of.values()))
        else:
            cmds = [enabled_under({})]
            cmd_of = None

        base = cmds[0]
        for other in cmds[1:]:
            if len(branch_probs[other]) != len(branch_probs[base]) or any(
                    abs(a - b) > 1e-12
                    for a, b in zip(branch_probs[other], branch_probs[base])):
                raise SketchError(
                    "commands on lines %d and %d compete under hole options in "
                    "state %s but differ in branch probabilities"
                    % (prog.commands[base].line, prog.commands[other].line,
                       _valname(var_names, vals)))

        def apply_update(cmd_idx, branch_idx, assignment):
            _, upd = prog.commands[cmd_idx].branches[branch_idx]
            new = dict(v)
            for var, e in upd:
                val = eval_expr(e, v, assignment, holes_by_name)
                if not isinstance(val, int) or isinstance(val, bool):
                    raise SketchError("update of %s is not an integer" % var,
                                      prog.commands[cmd_idx].line, 0)
                lo, hi = bounds[var]
                if not (lo <= val <= hi):
                    raise SketchError(
                        "update leaves bounds of %s (value %d) in state %s"
                        % (var, val, _valname(var_names, vals)),
                        prog.commands[cmd_idx].line, 0)
                new[var] = val
            succ_vals = tuple(new[n] for n in var_names)
            if succ_vals not in index:
                if len(index) >= max_states:
                    raise SketchError("state space exceeds %d valuations"
                                      % max_states)
                index[succ_vals] = len(valuations)
                valuations.append(succ_vals)
            return index[succ_vals]

        row = []
        for bi, p in enumerate(branch_probs[base]):
            upd_holes = sorted(
                {h for ci in cmds
                 for _, e in prog.commands[ci].branches[bi][1]
                 for h in holes_in(e)},
                key=hole_order.get)
            relevant = (all_guard_holes if len(cmds) > 1 or
                        (cmd_of and len(set(cmd_of.values())) > 1) else [])
            relevant = sorted(set(relevant) | set(upd_holes), key=hole_order.get)
            if not relevant:
                row.append((p, Fixed(apply_update(base, bi, {}))))
                continue
            table = {}
            for combo in itertools.product(*(option_labels(n) for n in relevant)):
                assignment = dict(zip(relevant, combo))
                if cmd_of:
                    gkey = tuple(assignment.get(n, option_labels(n)[0])
                                 for n in all_guard_holes)
                    # guard holes outside `relevant` cannot occur: relevant
                    # includes all guard holes whenever commands compete
                    ci = cmd_of[gkey]
                else:
                    ci = base
                table[combo] = apply_update(ci, bi, assignment)
            names, table = _reduce_table(relevant, table)
            if not names:
                row.append((p, Fixed(next(iter(table.values())))))
            else:
                row.append((p, HoleRef(names, table)))
        rows.append(tuple(row))

    fam_holes = tuple(Hole(h.name,
                           tuple(o.label for o in h.options),
                           tuple(o.cost for o in h.options))
                      for h in prog.holes)
    fam_constraints = tuple(_resolve_constraint(c, seen_labels)
                            for c in prog.constraints)
    return Family(
        n_states=len(valuations),
        init=0,
        holes=fam_holes,
        transitions=tuple(rows),
        constraints=fam_constraints,
        variables=var_names,
        valuations=tuple(valuations),
    )


def _valname(var_names, vals):
    return "(" + ",".join("%s=%d" % (n, x)
                          for n, x in zip(var_names, vals)) + ")"


def _resolve_constraint(expr, option_names):
    """Turn a formula over option names into one over (hole = option) atoms."""
    if isinstance(expr, Var):
        if expr.name not in option_names:
            raise SketchError("constraint references unknown option %r"
                              % expr.name)
        hole, label = option_names[expr.name]
        return cn.Atom(hole, label)
    if isinstance(expr, Un) and expr.op == "!":
        return cn.Not(_resolve_constraint(expr.arg, option_names))
    if isinstance(expr, Bin):
        if expr.op == "&":
            return cn.And((_resolve_constraint(expr.lhs, option_names),
                           _resolve_constraint(expr.rhs, option_names)))
        if expr.op == "|":
            return cn.Or((_resolve_constraint(expr.lhs, option_names),
                          _resolve_constraint(expr.rhs, option_names)))
        if expr.op == "=>":
            return cn.Implies(_resolve_constraint(expr.lhs, option_names),
                              _resolve_constraint(expr.rhs, option_names))
    raise SketchError("constraints must be propositional over option names")


def goal_states(fam: Family, expr_text: str) -> frozenset:
    """Evaluate a boolean expression over the family's variables per state."""
    expr = _Parser(_lex(expr_text)).expr()
    if holes_in(expr):
        raise SketchError("goal expression must not reference holes")
    if fam.variables is None:
        variables = ("s",)
        valuations = tuple((s,) for s in range(fam.n_states))
    else:
        variables = fam.variables
        valuations = fam.valuations
    goal = set()
    for s, vals in enumerate(valuations):
        if eval_expr(expr, dict(zip(variables, vals))):
            goal.add(s)
    return frozenset(goal)
