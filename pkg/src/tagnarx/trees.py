"""Labeled ordered trees, Gorn addressing, and the two tree-adjoining operations.

All values here are immutable: substitution and adjunction return new trees and
never touch their inputs, so trees can be shared freely across workers.  Gorn
addresses are tuples of 1-based child indices; the empty tuple addresses the
root.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .errors import (
    AddressNotFound,
    LabelMismatch,
    NotALeaf,
    NotAnAuxiliaryTree,
    NotAnInitialTree,
    NotInternal,
    UnknownTreeId,
)

GornAddress = tuple[int, ...]

TERMINAL = "terminal"
NONTERMINAL = "nonterminal"

INITIAL = "initial"
AUXILIARY = "auxiliary"


@dataclass(frozen=True)
class Symbol:
    """Alphabet symbol: a name plus whether it is terminal or nonterminal."""

    name: str
    kind: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("symbol name must be nonempty")
        if self.kind not in (TERMINAL, NONTERMINAL):
            raise ValueError(f"unknown symbol kind: {self.kind!r}")

    @property
    def is_terminal(self) -> bool:
        return self.kind == TERMINAL


def terminal(name: str) -> Symbol:
    return Symbol(name, TERMINAL)


def nonterminal(name: str) -> Symbol:
    return Symbol(name, NONTERMINAL)


@dataclass(frozen=True)
class SyntacticTree:
    """Ordered tree of labeled nodes.  Child order is significant.

    Internal nodes must carry nonterminal labels; leaves may carry either
    kind.  A node with children therefore can never be terminal-labeled and
    this is rejected at construction.
    """

    label: Symbol
    children: tuple["SyntacticTree", ...] = ()

    def __post_init__(self):
        if self.children and self.label.is_terminal:
            raise ValueError(
                f"internal node {self.label.name!r} must carry a nonterminal label"
            )

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def size(self) -> int:
        return 1 + sum(child.size() for child in self.children)

    def nodes(self) -> Iterator[tuple[GornAddress, "SyntacticTree"]]:
        """Pre-order traversal as (address, node) pairs."""
        yield (), self
        for index, child in enumerate(self.children, start=1):
            for address, node in child.nodes():
                yield (index, *address), node

    def leaves(self) -> Iterator[tuple[GornAddress, "SyntacticTree"]]:
        for address, node in self.nodes():
            if node.is_leaf:
                yield address, node


def resolve(tree: SyntacticTree, address: GornAddress) -> SyntacticTree:
    """Return the node at `address`, walking 1-based child indices from the root."""
    node = tree
    for depth, index in enumerate(address):
        if index < 1 or index > len(node.children):
            raise AddressNotFound(
                f"address {address} fails at step {depth}: "
                f"index {index} exceeds out-degree {len(node.children)}"
            )
        node = node.children[index - 1]
    return node


def _replace(tree: SyntacticTree, address: GornAddress, replacement: SyntacticTree) -> SyntacticTree:
    """Rebuild `tree` with the subtree at `address` swapped for `replacement`.

    Callers must have resolved `address` beforehand.
    """
    if not address:
        return replacement
    index = address[0]
    children = list(tree.children)
    children[index - 1] = _replace(children[index - 1], address[1:], replacement)
    return SyntacticTree(tree.label, tuple(children))


@dataclass(frozen=True)
class ElementaryTree:
    """An initial or auxiliary tree of a grammar.

    Auxiliary trees carry the address of their foot node.  The foot address
    must resolve; whether it is a leaf sharing the root label is checked by
    `validate_grammar` so that ill-formed grammars remain representable for
    validation.
    """

    id: str
    kind: str
    tree: SyntacticTree
    foot: GornAddress | None = None

    def __post_init__(self):
        if self.kind not in (INITIAL, AUXILIARY):
            raise ValueError(f"unknown elementary tree kind: {self.kind!r}")
        if self.kind == AUXILIARY:
            if self.foot is None:
                raise ValueError(f"auxiliary tree {self.id!r} needs a foot address")
            resolve(self.tree, self.foot)
        elif self.foot is not None:
            raise ValueError(f"initial tree {self.id!r} must not carry a foot address")


def substitute(host: SyntacticTree, leaf_at: GornAddress, initial: ElementaryTree) -> SyntacticTree:
    """Replace the leaf of `host` at `leaf_at` with a copy of an initial tree."""
    target = resolve(host, leaf_at)
    if initial.kind != INITIAL:
        raise NotAnInitialTree(f"{initial.id!r} is {initial.kind}, not initial")
    if not target.is_leaf:
        raise NotALeaf(f"substitution site {leaf_at} is an internal node")
    if target.label != initial.tree.label:
        raise LabelMismatch(
            f"leaf {target.label.name!r} cannot host initial tree "
            f"rooted at {initial.tree.label.name!r}"
        )
    return _replace(host, leaf_at, initial.tree)


def adjoin(host: SyntacticTree, at: GornAddress, aux: ElementaryTree) -> SyntacticTree:
    """Insert an auxiliary tree at an internal node of `host`.

    The subtree rooted at `at` is detached, hung at the auxiliary's foot,
    and the combined tree is put back in place of the detached node.
    """
    target = resolve(host, at)
    if aux.kind != AUXILIARY:
        raise NotAnAuxiliaryTree(f"{aux.id!r} is {aux.kind}, not auxiliary")
    if target.is_leaf:
        raise NotInternal(f"adjunction site {at} is a leaf")
    if target.label != aux.tree.label:
        raise LabelMismatch(
            f"internal node {target.label.name!r} cannot host auxiliary tree "
            f"rooted at {aux.tree.label.name!r}"
        )
    combined = _replace(aux.tree, aux.foot, target)
    return _replace(host, at, combined)


def yield_of(tree: SyntacticTree) -> tuple[Symbol, ...]:
    """Left-to-right labels of the leaves."""
    return tuple(node.label for _, node in tree.leaves())


def yield_names(tree: SyntacticTree) -> tuple[str, ...]:
    return tuple(symbol.name for symbol in yield_of(tree))


def is_saturated(tree: SyntacticTree) -> bool:
    """True iff every leaf carries a terminal label."""
    return all(node.label.is_terminal for _, node in tree.leaves())


@dataclass(frozen=True)
class Grammar:
    """A tree adjoining grammar: alphabets, start symbols, elementary trees."""

    nonterminals: frozenset[Symbol]
    terminals: frozenset[Symbol]
    start: frozenset[Symbol]
    initial_trees: tuple[ElementaryTree, ...]
    auxiliary_trees: tuple[ElementaryTree, ...]
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_id = {}
        for tree in (*self.initial_trees, *self.auxiliary_trees):
            by_id[tree.id] = tree
        object.__setattr__(self, "_by_id", by_id)

    @property
    def elementary_trees(self) -> tuple[ElementaryTree, ...]:
        return (*self.initial_trees, *self.auxiliary_trees)

    def elementary(self, tree_id: str) -> ElementaryTree:
        try:
            return self._by_id[tree_id]
        except KeyError:
            raise UnknownTreeId(f"no elementary tree with id {tree_id!r}") from None

    @property
    def auxiliary_ids(self) -> tuple[str, ...]:
        return tuple(tree.id for tree in self.auxiliary_trees)


def validate_grammar(grammar: Grammar) -> list[str]:
    """Check every grammar invariant; return one message per breached clause.

    Violations are data, not faults: an empty list means the grammar is valid.
    """
    violations: list[str] = []
    nonterminal_names = {s.name for s in grammar.nonterminals}
    terminal_names = {s.name for s in grammar.terminals}
    alphabet = grammar.nonterminals | grammar.terminals

    overlap = nonterminal_names & terminal_names
    if overlap:
        violations.append(f"names used as both terminal and nonterminal: {sorted(overlap)}")
    for symbol in grammar.start:
        if symbol not in grammar.nonterminals:
            violations.append(f"start symbol {symbol.name!r} is not a nonterminal of the grammar")

    seen_ids: set[str] = set()
    for elem in grammar.elementary_trees:
        if elem.id in seen_ids:
            violations.append(f"duplicate elementary tree id {elem.id!r}")
        seen_ids.add(elem.id)

        for address, node in elem.tree.nodes():
            if node.label not in alphabet:
                violations.append(
                    f"{elem.id}: label {node.label.name!r} ({node.label.kind}) "
                    f"at {address} is outside the grammar alphabets"
                )
        root = elem.tree.label
        if root.is_terminal:
            violations.append(f"{elem.id}: root label {root.name!r} must be a nonterminal")

        if elem.kind == INITIAL:
            for address, node in elem.tree.leaves():
                if node.label == root and address != ():
                    violations.append(
                        f"{elem.id}: initial tree leaf at {address} repeats the root label "
                        f"{root.name!r}"
                    )
        else:
            foot_node = resolve(elem.tree, elem.foot)
            if elem.foot == ():
                violations.append(f"{elem.id}: foot must be a proper descendant of the root")
            if not foot_node.is_leaf:
                violations.append(f"{elem.id}: foot at {elem.foot} is not a leaf")
            if foot_node.label != root:
                violations.append(
                    f"{elem.id}: foot label {foot_node.label.name!r} differs from "
                    f"root label {root.name!r}"
                )
            matching = [
                address
                for address, node in elem.tree.leaves()
                if node.label == root and address != elem.foot
            ]
            for address in matching:
                violations.append(
                    f"{elem.id}: leaf at {address} repeats the root label; "
                    f"the foot must be the unique such leaf"
                )
    return violations


# --- JSON serialization -------------------------------------------------
#
# A grammar document lists the alphabets plus, per elementary tree, a flat
# array of node records {address, label, kind} and the foot address for
# auxiliary trees.


def _tree_to_records(tree: SyntacticTree) -> list[dict]:
    return [
        {"address": list(address), "label": node.label.name, "kind": node.label.kind}
        for address, node in tree.nodes()
    ]


def _tree_from_records(records: list[dict], context: str) -> SyntacticTree:
    by_address: dict[GornAddress, Symbol] = {}
    for record in records:
        address = tuple(int(i) for i in record["address"])
        if address in by_address:
            raise ValueError(f"{context}: duplicate node address {address}")
        by_address[address] = Symbol(str(record["label"]), str(record["kind"]))
    if () not in by_address:
        raise ValueError(f"{context}: missing root node record")

    def build(address: GornAddress) -> SyntacticTree:
        children = []
        index = 1
        while (*address, index) in by_address:
            children.append(build((*address, index)))
            index += 1
        expected = sum(1 for a in by_address if a[: len(address)] == address and len(a) == len(address) + 1)
        if expected != len(children):
            raise ValueError(f"{context}: child indices below {address} are not contiguous from 1")
        return SyntacticTree(by_address[address], tuple(children))

    built = build(())
    if built.size() != len(by_address):
        raise ValueError(f"{context}: node records do not form a single connected tree")
    return built


def grammar_to_json(grammar: Grammar) -> dict:
    return {
        "nonterminals": sorted(s.name for s in grammar.nonterminals),
        "terminals": sorted(s.name for s in grammar.terminals),
        "start": sorted(s.name for s in grammar.start),
        "initial_trees": [
            {"id": tree.id, "nodes": _tree_to_records(tree.tree)}
            for tree in grammar.initial_trees
        ],
        "auxiliary_trees": [
            {"id": tree.id, "nodes": _tree_to_records(tree.tree), "foot": list(tree.foot)}
            for tree in grammar.auxiliary_trees
        ],
    }


def grammar_from_json(doc: dict) -> Grammar:
    try:
        initial = tuple(
            ElementaryTree(
                str(entry["id"]),
                INITIAL,
                _tree_from_records(entry["nodes"], f"initial tree {entry.get('id')!r}"),
            )
            for entry in doc["initial_trees"]
        )
        auxiliary = tuple(
            ElementaryTree(
                str(entry["id"]),
                AUXILIARY,
                _tree_from_records(entry["nodes"], f"auxiliary tree {entry.get('id')!r}"),
                tuple(int(i) for i in entry["foot"]),
            )
            for entry in doc["auxiliary_trees"]
        )
        return Grammar(
            nonterminals=frozenset(nonterminal(name) for name in doc["nonterminals"]),
            terminals=frozenset(terminal(name) for name in doc["terminals"]),
            start=frozenset(nonterminal(name) for name in doc["start"]),
            initial_trees=initial,
            auxiliary_trees=auxiliary,
        )
    except KeyError as exc:
        raise ValueError(f"grammar document is missing field {exc}") from None
