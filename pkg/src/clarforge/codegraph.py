"""Operation graphs for Python snippets.

Parses source into a flat list of operation nodes (calls, method calls,
field accesses, imports, numeric expressions) with data-flow edges:
``arg_producers`` point at nodes whose results feed an operation's
arguments, ``receiver_base`` points at the node an attribute or method
hangs off (transitively back to the constructing call).  Alias tracking is
flow-insensitive: the last assignment to a name wins.

Key-operation extraction then filters the sample's nodes: imports and
numeric expressions are removed, each line keeps only its terminal
operation, print calls are removed, and any operation whose receiver chain
contains another surviving operation is removed.
"""

import ast
import warnings
from dataclasses import dataclass, field

from clarforge.errors import GraphParseError

KIND_CALL = "call"
KIND_METHOD = "method_call"
KIND_FIELD = "field_access"
KIND_IMPORT = "import_stmt"
KIND_NUMERIC = "numeric_expr"
KIND_PRINT = "print_call"
KIND_OTHER = "other"


@dataclass
class OpNode:
    node_id: int
    fqname: str
    kind: str
    line: int
    order_in_line: int
    receiver_base: int | None = None
    arg_producers: set[int] = field(default_factory=set)

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "fqname": self.fqname,
            "kind": self.kind,
            "line": self.line,
            "order_in_line": self.order_in_line,
            "receiver_base": self.receiver_base,
            "arg_producers": sorted(self.arg_producers),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OpNode":
        return cls(
            node_id=d["node_id"],
            fqname=d["fqname"],
            kind=d["kind"],
            line=d["line"],
            order_in_line=d["order_in_line"],
            receiver_base=d.get("receiver_base"),
            arg_producers=set(d.get("arg_producers", [])),
        )

    @property
    def terminal_name(self) -> str:
        return self.fqname.rsplit(".", 1)[-1]


@dataclass
class CodeGraph:
    nodes: list[OpNode]
    sample_node_ids: set[int]

    def node(self, node_id: int) -> OpNode | None:
        return self._by_id.get(node_id)

    def __post_init__(self):
        self._by_id = {n.node_id: n for n in self.nodes}

    def receiver_chain(self, node: OpNode) -> list[int]:
        """Transitive receiver_base ids, nearest first; tolerates missing ids."""
        chain: list[int] = []
        seen = {node.node_id}
        cur = node.receiver_base
        while cur is not None and cur not in seen:
            chain.append(cur)
            seen.add(cur)
            base = self._by_id.get(cur)
            cur = base.receiver_base if base is not None else None
        return chain


class _Binding:
    """What a name currently refers to: a dotted path, an op node, or nothing."""

    __slots__ = ("path", "node")

    def __init__(self, path: str | None = None, node: int | None = None):
        self.path = path
        self.node = node


_EMPTY = _Binding()


class _GraphBuilder:
    def __init__(self):
        self.nodes: list[OpNode] = []
        self.bindings: dict[str, _Binding] = {}
        self._line_counters: dict[int, int] = {}
        self._stmt_line = 1

    # -- node construction ------------------------------------------------

    def _new_node(self, fqname: str, kind: str, receiver: int | None = None,
                  producers: set[int] | None = None) -> int:
        line = self._stmt_line
        order = self._line_counters.get(line, 0)
        self._line_counters[line] = order + 1
        node = OpNode(
            node_id=len(self.nodes),
            fqname=fqname,
            kind=kind,
            line=line,
            order_in_line=order,
            receiver_base=receiver,
            arg_producers=producers or set(),
        )
        self.nodes.append(node)
        return node.node_id

    # -- statements --------------------------------------------------------

    def process_module(self, tree: ast.Module) -> None:
        for stmt in tree.body:
            self._stmt(stmt)

    def _stmt(self, stmt: ast.stmt) -> None:
        self._stmt_line = stmt.lineno
        if isinstance(stmt, ast.Import):
            for alias in stmt.names:
                self._new_node(alias.name, KIND_IMPORT)
                if alias.asname:
                    self.bindings[alias.asname] = _Binding(path=alias.name)
                else:
                    root = alias.name.split(".", 1)[0]
                    self.bindings[root] = _Binding(path=root)
        elif isinstance(stmt, ast.ImportFrom):
            module = "." * stmt.level + (stmt.module or "")
            for alias in stmt.names:
                if alias.name == "*":
                    self._new_node(f"{module}.*", KIND_IMPORT)
                    continue
                full = f"{module}.{alias.name}" if module else alias.name
                self._new_node(full, KIND_IMPORT)
                self.bindings[alias.asname or alias.name] = _Binding(path=full)
        elif isinstance(stmt, ast.Assign):
            single = stmt.targets[0] if len(stmt.targets) == 1 else None
            if (
                isinstance(single, (ast.Tuple, ast.List))
                and isinstance(stmt.value, (ast.Tuple, ast.List))
                and len(single.elts) == len(stmt.value.elts)
            ):
                for t, r in zip(single.elts, stmt.value.elts):
                    self._bind_target(t, r, self._resolve_value(r))
            else:
                value = self._resolve_value(stmt.value)
                for target in stmt.targets:
                    self._bind_target(target, stmt.value, value)
        elif isinstance(stmt, ast.AnnAssign):
            if stmt.value is not None:
                value = self._resolve_value(stmt.value)
                self._bind_target(stmt.target, stmt.value, value)
        elif isinstance(stmt, ast.AugAssign):
            target_prod = self._eval(stmt.target) if not isinstance(stmt.target, ast.Name) else set()
            if isinstance(stmt.target, ast.Name):
                bound = self.bindings.get(stmt.target.id)
                if bound is not None and bound.node is not None:
                    target_prod = {bound.node}
            rhs = self._eval(stmt.value)
            op_name = type(stmt.op).__name__.lower()
            nid = self._new_node(f"<{op_name}>", KIND_NUMERIC, producers=target_prod | rhs)
            if isinstance(stmt.target, ast.Name):
                self.bindings[stmt.target.id] = _Binding(node=nid)
        elif isinstance(stmt, ast.Expr):
            self._eval(stmt.value)
        elif isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef)):
            self.bindings[stmt.name] = _EMPTY
            for inner in stmt.body:
                self._stmt(inner)
        elif isinstance(stmt, ast.ClassDef):
            self.bindings[stmt.name] = _EMPTY
            for inner in stmt.body:
                self._stmt(inner)
        elif isinstance(stmt, (ast.If, ast.While)):
            self._eval(stmt.test)
            for inner in stmt.body + stmt.orelse:
                self._stmt(inner)
        elif isinstance(stmt, (ast.For, ast.AsyncFor)):
            self._eval(stmt.iter)
            self._bind_target(stmt.target, None, _EMPTY)
            for inner in stmt.body + stmt.orelse:
                self._stmt(inner)
        elif isinstance(stmt, (ast.With, ast.AsyncWith)):
            for item in stmt.items:
                value = self._resolve_value(item.context_expr)
                if item.optional_vars is not None:
                    self._bind_target(item.optional_vars, item.context_expr, value)
            for inner in stmt.body:
                self._stmt(inner)
        elif isinstance(stmt, ast.Try):
            for inner in stmt.body + stmt.orelse + stmt.finalbody:
                self._stmt(inner)
            for handler in stmt.handlers:
                for inner in handler.body:
                    self._stmt(inner)
        elif isinstance(stmt, ast.Return):
            if stmt.value is not None:
                self._eval(stmt.value)
        elif isinstance(stmt, (ast.Raise, ast.Assert)):
            for child in ast.iter_child_nodes(stmt):
                if isinstance(child, ast.expr):
                    self._eval(child)
        elif isinstance(stmt, ast.Delete):
            for target in stmt.targets:
                if isinstance(target, ast.Name):
                    self.bindings.pop(target.id, None)

    def _bind_target(self, target: ast.expr, rhs: ast.expr | None, value: _Binding) -> None:
        if isinstance(target, ast.Name):
            self.bindings[target.id] = value
        elif isinstance(target, ast.Starred):
            self._bind_target(target.value, None, _EMPTY)
        elif isinstance(target, (ast.Tuple, ast.List)):
            # unpacking from one producer: every unpacked name flows from it
            for t in target.elts:
                self._bind_target(t, None, value)
        elif isinstance(target, (ast.Attribute, ast.Subscript)):
            # attribute/subscript stores introduce no alias, but evaluate
            # any sub-expressions so their operations are recorded
            if isinstance(target, ast.Subscript):
                self._eval(target.slice)

    # -- expressions -------------------------------------------------------

    def _resolve_value(self, expr: ast.expr) -> _Binding:
        """Evaluate ``expr`` for side effects and describe its value."""
        if isinstance(expr, ast.Name):
            return self.bindings.get(expr.id, _EMPTY)
        producers = self._eval(expr)
        if len(producers) == 1:
            nid = next(iter(producers))
            return _Binding(path=self.nodes[nid].fqname, node=nid)
        return _EMPTY

    def _eval(self, expr: ast.expr) -> set[int]:
        """Create nodes for the operations in ``expr``; return its producers."""
        if isinstance(expr, ast.Call):
            return self._eval_call(expr)
        if isinstance(expr, ast.Attribute):
            return self._eval_attribute(expr)
        if isinstance(expr, ast.Name):
            bound = self.bindings.get(expr.id)
            if bound is not None and bound.node is not None:
                return {bound.node}
            return set()
        if isinstance(expr, ast.BinOp):
            producers = self._eval(expr.left) | self._eval(expr.right)
            op_name = type(expr.op).__name__.lower()
            return {self._new_node(f"<{op_name}>", KIND_NUMERIC, producers=producers)}
        if isinstance(expr, ast.UnaryOp):
            producers = self._eval(expr.operand)
            op_name = type(expr.op).__name__.lower()
            return {self._new_node(f"<{op_name}>", KIND_NUMERIC, producers=producers)}
        if isinstance(expr, ast.Lambda):
            return set()  # deferred body: best-effort skip
        if isinstance(expr, (ast.ListComp, ast.SetComp, ast.GeneratorExp, ast.DictComp)):
            producers: set[int] = set()
            for gen in expr.generators:
                producers |= self._eval(gen.iter)
                for cond in gen.ifs:
                    producers |= self._eval(cond)
            if isinstance(expr, ast.DictComp):
                producers |= self._eval(expr.key) | self._eval(expr.value)
            else:
                producers |= self._eval(expr.elt)
            return producers
        # containers, comparisons, slices, f-strings: pass producers through
        producers = set()
        for child in ast.iter_child_nodes(expr):
            if isinstance(child, ast.expr):
                producers |= self._eval(child)
        return producers

    def _eval_call(self, call: ast.Call) -> set[int]:
        fqname, receiver, kind, extra = self._resolve_callable(call.func)
        producers: set[int] = set(extra)
        for arg in call.args:
            producers |= self._eval(arg)
        for kw in call.keywords:
            producers |= self._eval(kw.value)
        nid = self._new_node(fqname, kind, receiver=receiver, producers=producers)
        return {nid}

    def _eval_attribute(self, expr: ast.Attribute) -> set[int]:
        fqname, receiver, _, extra = self._resolve_chain(expr)
        nid = self._new_node(fqname, KIND_FIELD, receiver=receiver, producers=set(extra))
        return {nid}

    def _resolve_callable(self, func: ast.expr) -> tuple[str, int | None, str, set[int]]:
        if isinstance(func, ast.Name):
            bound = self.bindings.get(func.id)
            if func.id == "print" and bound is None:
                return "print", None, KIND_PRINT, set()
            if bound is not None and bound.path is not None:
                return bound.path, bound.node, KIND_CALL, set()
            if bound is not None and bound.node is not None:
                return self.nodes[bound.node].fqname, bound.node, KIND_CALL, set()
            return func.id, None, KIND_OTHER, set()
        if isinstance(func, ast.Attribute):
            fqname, receiver, is_module, extra = self._resolve_chain(func)
            kind = KIND_CALL if is_module else KIND_METHOD
            return fqname, receiver, kind, extra
        # call of an arbitrary expression, e.g. (f or g)(x)
        extra = self._eval(func)
        return "<expr>", None, KIND_OTHER, extra

    def _resolve_chain(self, expr: ast.Attribute) -> tuple[str, int | None, bool, set[int]]:
        """Resolve a dotted chain to (fqname, receiver node, is_module_path, producers)."""
        attrs: list[str] = []
        base: ast.expr = expr
        while isinstance(base, ast.Attribute):
            attrs.append(base.attr)
            base = base.value
        attrs.reverse()
        suffix = ".".join(attrs)
        if isinstance(base, ast.Name):
            bound = self.bindings.get(base.id)
            if bound is None:
                return f"{base.id}.{suffix}", None, False, set()
            if bound.node is not None:
                prefix = bound.path or base.id
                return f"{prefix}.{suffix}", bound.node, False, set()
            if bound.path is not None:
                return f"{bound.path}.{suffix}", None, True, set()
            return f"{base.id}.{suffix}", None, False, set()
        if isinstance(base, ast.Subscript):
            inner = self._resolve_subscript(base)
            extra = self._eval(base.slice)
            prefix = inner.path if inner.path else "<expr>"
            return f"{prefix}.{suffix}", inner.node, False, extra
        producers = self._eval(base)
        if len(producers) == 1:
            nid = next(iter(producers))
            return f"{self.nodes[nid].fqname}.{suffix}", nid, False, set()
        return f"<expr>.{suffix}", None, False, producers

    def _resolve_subscript(self, expr: ast.Subscript) -> _Binding:
        value = expr.value
        if isinstance(value, ast.Name):
            return self.bindings.get(value.id, _EMPTY)
        if isinstance(value, ast.Subscript):
            return self._resolve_subscript(value)
        return self._resolve_value(value)


def build_graph(code: str, context_cells: list[str] | None = None) -> CodeGraph:
    """Parse ``code`` (with optional prior context cells) into a CodeGraph.

    Context cells contribute alias and import bindings plus nodes that
    receiver chains may reference, but their nodes are excluded from
    ``sample_node_ids``.  Unparseable context cells are skipped with a
    warning; a parse failure in the sample's own code raises
    :class:`GraphParseError`.
    """
    builder = _GraphBuilder()
    for idx, cell in enumerate(context_cells or []):
        try:
            tree = ast.parse(cell)
        except SyntaxError as exc:
            warnings.warn(f"skipping unparseable context cell {idx}: {exc.msg}", stacklevel=2)
            continue
        builder.process_module(tree)
    context_count = len(builder.nodes)
    try:
        tree = ast.parse(code)
    except SyntaxError as exc:
        raise GraphParseError(
            f"cannot parse sample code at line {exc.lineno}, column {exc.offset}: {exc.msg}",
            line=exc.lineno or 0,
            col=exc.offset or 0,
        ) from exc
    builder.process_module(tree)
    sample_ids = {n.node_id for n in builder.nodes[context_count:]}
    return CodeGraph(nodes=builder.nodes, sample_node_ids=sample_ids)


def extract_key_operations(graph: CodeGraph) -> list[OpNode]:
    """Filter the sample's operations down to key operations.

    Applies, in order: drop imports and numeric expressions; per line keep
    only the terminal operation (the one no same-line operation consumes;
    rightmost root when a line has several independent roots); drop print
    calls; drop operations whose receiver chain contains another surviving
    operation.  Output preserves source order.
    """
    ops = [n for n in graph.nodes if n.node_id in graph.sample_node_ids]
    ops.sort(key=lambda n: (n.line, n.order_in_line))

    ops = [n for n in ops if n.kind not in (KIND_IMPORT, KIND_NUMERIC)]

    per_line: dict[int, list[OpNode]] = {}
    for n in ops:
        per_line.setdefault(n.line, []).append(n)
    survivors: list[OpNode] = []
    for line in sorted(per_line):
        group = per_line[line]
        ids = {n.node_id for n in group}
        consumed: set[int] = set()
        for n in group:
            consumed |= n.arg_producers & ids
            if n.receiver_base in ids:
                consumed.add(n.receiver_base)
        roots = [n for n in group if n.node_id not in consumed]
        if roots:
            survivors.append(roots[-1])

    survivors = [n for n in survivors if n.kind != KIND_PRINT]

    surviving_ids = {n.node_id for n in survivors}
    out = []
    for n in survivors:
        if not any(b in surviving_ids for b in graph.receiver_chain(n)):
            out.append(n)
    return out


def graph_to_json(graph: CodeGraph, key_ops: list[OpNode] | None = None) -> dict:
    key_ids = {n.node_id for n in key_ops} if key_ops is not None else set()
    return {
        "nodes": [dict(n.to_dict(), key_operation=n.node_id in key_ids) for n in graph.nodes],
        "sample_node_ids": sorted(graph.sample_node_ids),
    }


def graph_to_dot(graph: CodeGraph, key_ops: list[OpNode] | None = None) -> str:
    """DOT rendering; key operations are filled red, other nodes gray."""
    key_ids = {n.node_id for n in key_ops} if key_ops else set()
    lines = ["digraph codegraph {", "  rankdir=TB;"]
    for n in graph.nodes:
        color = "indianred2" if n.node_id in key_ids else "gray80"
        shape = "box"
        label = f"{n.fqname}\\n[{n.kind}]"
        lines.append(
            f'  n{n.node_id} [label="{label}", style=filled, fillcolor={color}, shape={shape}];'
        )
    for n in graph.nodes:
        for p in sorted(n.arg_producers):
            lines.append(f"  n{p} -> n{n.node_id};")
        if n.receiver_base is not None:
            lines.append(f'  n{n.receiver_base} -> n{n.node_id} [style=dashed, label="recv"];')
    lines.append("}")
    return "\n".join(lines)
