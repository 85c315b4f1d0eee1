"""The canonical grammar for polynomial input-output models, and derivation
trees as search genotypes.

The grammar grows expressions of the shape ``xi + c*f1*...*fn + ...`` purely
by adjunction: one auxiliary tree appends a parameterized input or output
term, two more multiply an extra signal factor into a term, and a final one
prepends a unit delay to a factor.  A derivation tree records which auxiliary
tree was adjoined at which address of which elementary-tree instance; it
compiles deterministically into a derived syntactic tree whose yield is the
model expression.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import InvalidDerivation, InvalidSite, UnknownTreeId, AddressNotFound, NotInternal
from .expressions import (
    COEFFICIENT_TOKEN,
    DELAY_TOKEN,
    INPUT,
    NOISE_TOKEN,
    OUTPUT,
    PLUS_TOKEN,
    TIMES_TOKEN,
    NarxExpression,
    parse_yield,
)
from .trees import (
    AUXILIARY,
    ElementaryTree,
    GornAddress,
    Grammar,
    INITIAL,
    SyntacticTree,
    adjoin,
    nonterminal,
    terminal,
    yield_of,
)

# Elementary tree ids, named for what adjoining them does.
NOISE_SEED = "noise"
ADD_INPUT_TERM = "input_term"
ADD_OUTPUT_TERM = "output_term"
MUL_INPUT_FACTOR = "input_factor"
MUL_OUTPUT_FACTOR = "output_factor"
ADD_DELAY = "delay"

FIR_SUBSET = frozenset({ADD_INPUT_TERM, ADD_DELAY})
ARX_SUBSET = frozenset({ADD_INPUT_TERM, ADD_OUTPUT_TERM, ADD_DELAY})

_SUM = nonterminal("expr0")
_PRODUCT = nonterminal("expr1")
_SIGNAL = nonterminal("expr2")
_OP = nonterminal("op")
_AFF = nonterminal("aff")
_PAR = nonterminal("par")


def _leaf(symbol) -> SyntacticTree:
    return SyntacticTree(symbol)


def _node(symbol, *children: SyntacticTree) -> SyntacticTree:
    return SyntacticTree(symbol, tuple(children))


def _term_tree(signal_name: str) -> SyntacticTree:
    # expr0 -> [expr0*, op -> +, expr1 -> (par -> c, op -> *, expr2 -> signal)]
    return _node(
        _SUM,
        _leaf(_SUM),
        _node(_OP, _leaf(terminal(PLUS_TOKEN))),
        _node(
            _PRODUCT,
            _node(_PAR, _leaf(terminal(COEFFICIENT_TOKEN))),
            _node(_OP, _leaf(terminal(TIMES_TOKEN))),
            _node(_SIGNAL, _leaf(terminal(signal_name))),
        ),
    )


def _factor_tree(signal_name: str) -> SyntacticTree:
    # expr1 -> [expr1*, op -> *, expr2 -> signal]
    return _node(
        _PRODUCT,
        _leaf(_PRODUCT),
        _node(_OP, _leaf(terminal(TIMES_TOKEN))),
        _node(_SIGNAL, _leaf(terminal(signal_name))),
    )


@lru_cache(maxsize=1)
def g_narx() -> Grammar:
    """The canonical grammar over {u, y, xi, c, +, *, q^-1}.

    A single initial tree yields the bare noise model; five auxiliary trees
    add terms, multiply factors, and prepend delays.
    """
    initial = ElementaryTree(
        NOISE_SEED, INITIAL, _node(_SUM, _node(_AFF, _leaf(terminal(NOISE_TOKEN))))
    )
    auxiliary = (
        ElementaryTree(ADD_INPUT_TERM, AUXILIARY, _term_tree(INPUT), foot=(1,)),
        ElementaryTree(ADD_OUTPUT_TERM, AUXILIARY, _term_tree(OUTPUT), foot=(1,)),
        ElementaryTree(MUL_INPUT_FACTOR, AUXILIARY, _factor_tree(INPUT), foot=(1,)),
        ElementaryTree(MUL_OUTPUT_FACTOR, AUXILIARY, _factor_tree(OUTPUT), foot=(1,)),
        ElementaryTree(
            ADD_DELAY,
            AUXILIARY,
            _node(_SIGNAL, _leaf(terminal(DELAY_TOKEN)), _leaf(_SIGNAL)),
            foot=(2,),
        ),
    )
    return Grammar(
        nonterminals=frozenset({_SUM, _PRODUCT, _SIGNAL, _OP, _AFF, _PAR}),
        terminals=frozenset(
            terminal(name)
            for name in (INPUT, OUTPUT, NOISE_TOKEN, COEFFICIENT_TOKEN, PLUS_TOKEN, TIMES_TOKEN, DELAY_TOKEN)
        ),
        start=frozenset({_SUM}),
        initial_trees=(initial,),
        auxiliary_trees=auxiliary,
    )


def restrict(grammar: Grammar, aux_subset) -> Grammar:
    """Keep only the named auxiliary trees, e.g. FIR_SUBSET or ARX_SUBSET."""
    subset = frozenset(aux_subset)
    known = set(grammar.auxiliary_ids)
    for tree_id in subset:
        if tree_id not in known:
            raise UnknownTreeId(f"no auxiliary tree with id {tree_id!r}")
    return Grammar(
        nonterminals=grammar.nonterminals,
        terminals=grammar.terminals,
        start=grammar.start,
        initial_trees=grammar.initial_trees,
        auxiliary_trees=tuple(t for t in grammar.auxiliary_trees if t.id in subset),
    )


@lru_cache(maxsize=None)
def adjunction_sites(grammar: Grammar, tree_id: str) -> tuple[tuple[GornAddress, tuple[str, ...]], ...]:
    """Internal-node addresses of an elementary tree that can host adjunction,
    with the auxiliary-tree ids legal at each address."""
    elem = grammar.elementary(tree_id)
    by_root_label: dict = {}
    for aux in grammar.auxiliary_trees:
        by_root_label.setdefault(aux.tree.label, []).append(aux.id)
    sites = []
    for address, node in elem.tree.nodes():
        if node.is_leaf:
            continue
        allowed = by_root_label.get(node.label)
        if allowed:
            sites.append((address, tuple(allowed)))
    return tuple(sites)


@lru_cache(maxsize=None)
def required_delay_sites(grammar: Grammar, tree_id: str) -> tuple[GornAddress, ...]:
    """Addresses that must receive a delay adjunction for causality.

    These are the signal-group ancestors of output leaves: an output sample
    may never enter a model undelayed, so every tree introducing one forces
    at least one delay on top of it.
    """
    elem = grammar.elementary(tree_id)
    addresses = []
    for leaf_address, node in elem.tree.leaves():
        if node.label.name != OUTPUT:
            continue
        enclosing = None
        for address, candidate in elem.tree.nodes():
            if (
                candidate.label == _SIGNAL
                and leaf_address[: len(address)] == address
                and len(address) < len(leaf_address)
            ):
                if enclosing is None or len(address) > len(enclosing):
                    enclosing = address
        if enclosing is not None:
            addresses.append(enclosing)
    return tuple(addresses)


@lru_cache(maxsize=None)
def _delay_providers(grammar: Grammar, tree_id: str, address: GornAddress) -> tuple[str, ...]:
    """Auxiliary trees that can satisfy a required delay site without
    introducing further undelayed outputs."""
    label = None
    elem = grammar.elementary(tree_id)
    for node_address, node in elem.tree.nodes():
        if node_address == address:
            label = node.label
    return tuple(
        aux.id
        for aux in grammar.auxiliary_trees
        if aux.tree.label == label and not required_delay_sites(grammar, aux.id)
    )


# --- derivation trees ------------------------------------------------------


@dataclass(frozen=True)
class DerivationNode:
    """One elementary-tree instance plus the adjunctions recorded inside it.

    Children are keyed by the Gorn address, within this instance's elementary
    tree, at which the child's auxiliary tree was adjoined.  Children are kept
    sorted by address so structurally equal derivations compare equal.
    """

    tree_id: str
    children: tuple[tuple[GornAddress, "DerivationNode"], ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(self.children, key=lambda item: item[0]))
        addresses = [address for address, _ in ordered]
        if len(set(addresses)) != len(addresses):
            raise InvalidDerivation(f"repeated adjunction site in {self.tree_id!r} node")
        object.__setattr__(self, "children", ordered)

    def size(self) -> int:
        return 1 + sum(child.size() for _, child in self.children)

    def child_at(self, address: GornAddress) -> "DerivationNode | None":
        for site, child in self.children:
            if site == address:
                return child
        return None


DerivationPath = tuple[GornAddress, ...]


@dataclass(frozen=True)
class DerivationTree:
    """Genotype: the record of adjunctions that builds one derived tree."""

    root: DerivationNode

    def adjunction_count(self) -> int:
        return self.root.size() - 1

    def nodes(self) -> Iterator[tuple[DerivationPath, DerivationNode]]:
        """Pre-order (path, node) pairs; a path is the list of site addresses
        walked from the root instance."""

        def walk(path: DerivationPath, node: DerivationNode):
            yield path, node
            for address, child in node.children:
                yield from walk((*path, address), child)

        yield from walk((), self.root)

    def node_at(self, path: DerivationPath) -> DerivationNode:
        node = self.root
        for address in path:
            child = node.child_at(address)
            if child is None:
                raise InvalidDerivation(f"no derivation node at path {path}")
            node = child
        return node

    def to_doc(self) -> dict:
        def encode(node: DerivationNode, site: GornAddress | None) -> dict:
            doc = {"tree_id": node.tree_id}
            if site is not None:
                doc["site"] = list(site)
            doc["children"] = [encode(child, address) for address, child in node.children]
            return doc

        return encode(self.root, None)

    @classmethod
    def from_doc(cls, doc: dict) -> "DerivationTree":
        def decode(entry: dict) -> tuple[GornAddress | None, DerivationNode]:
            children = []
            for child_doc in entry.get("children", ()):
                site, child = decode(child_doc)
                if site is None:
                    raise InvalidDerivation("non-root derivation node lacks a site address")
                children.append((site, child))
            site = entry.get("site")
            address = tuple(int(i) for i in site) if site is not None else None
            return address, DerivationNode(str(entry["tree_id"]), tuple(children))

        site, root = decode(doc)
        if site is not None:
            raise InvalidDerivation("root derivation node must not carry a site address")
        return cls(root)


def replace_subtree(
    derivation: DerivationTree, path: DerivationPath, replacement: DerivationNode | None
) -> DerivationTree:
    """Return a new derivation with the node at `path` swapped or removed.

    Passing None deletes the edge entirely; the root can never be removed.
    """
    if not path:
        if replacement is None:
            raise InvalidDerivation("the root initial tree cannot be deleted")
        return DerivationTree(replacement)

    def rebuild(node: DerivationNode, remaining: DerivationPath) -> DerivationNode:
        address = remaining[0]
        children = []
        found = False
        for site, child in node.children:
            if site != address:
                children.append((site, child))
                continue
            found = True
            if len(remaining) == 1:
                if replacement is not None:
                    children.append((site, replacement))
            else:
                children.append((site, rebuild(child, remaining[1:])))
        if not found:
            raise InvalidDerivation(f"no derivation node at path {path}")
        return DerivationNode(node.tree_id, tuple(children))

    return DerivationTree(rebuild(derivation.root, path))


def derivation_violations(
    derivation: DerivationTree, grammar: Grammar, max_adjunctions: int | None = None
) -> list[str]:
    """Structural and causality checks; empty list means the genotype is valid."""
    violations: list[str] = []
    try:
        root_elem = grammar.elementary(derivation.root.tree_id)
        if root_elem.kind != INITIAL:
            violations.append(f"root tree {derivation.root.tree_id!r} is not an initial tree")
    except UnknownTreeId:
        violations.append(f"unknown root tree id {derivation.root.tree_id!r}")
        return violations

    aux_ids = set(grammar.auxiliary_ids)
    for path, node in derivation.nodes():
        sites = dict(adjunction_sites(grammar, node.tree_id))
        for address, child in node.children:
            if child.tree_id not in aux_ids:
                violations.append(f"{path}: child {child.tree_id!r} is not an auxiliary tree")
                continue
            allowed = sites.get(address)
            if allowed is None:
                violations.append(
                    f"{path}: address {address} is not an adjunction site of {node.tree_id!r}"
                )
            elif child.tree_id not in allowed:
                violations.append(
                    f"{path}: auxiliary tree {child.tree_id!r} cannot adjoin at {address} "
                    f"of {node.tree_id!r}"
                )
        for address in required_delay_sites(grammar, node.tree_id):
            if node.child_at(address) is None:
                violations.append(
                    f"{path}: output factor of {node.tree_id!r} lacks its delay adjunction"
                )
    if max_adjunctions is not None and derivation.adjunction_count() > max_adjunctions:
        violations.append(
            f"{derivation.adjunction_count()} adjunctions exceed the budget {max_adjunctions}"
        )
    return violations


def is_valid_derivation(
    derivation: DerivationTree, grammar: Grammar, max_adjunctions: int | None = None
) -> bool:
    return not derivation_violations(derivation, grammar, max_adjunctions)


def derived_tree(derivation: DerivationTree, grammar: Grammar) -> SyntacticTree:
    """Execute the recorded adjunctions bottom-up and return the derived tree."""
    tree, _ = _compile_node(derivation.root, grammar)
    return tree


def _compile_node(node: DerivationNode, grammar: Grammar) -> tuple[SyntacticTree, GornAddress | None]:
    elem = grammar.elementary(node.tree_id)
    tree, foot = elem.tree, elem.foot
    # Deeper sites first: adjoining at an address never disturbs the address
    # of any node outside the adjoined subtree, so shallower sites stay valid.
    for address, child in sorted(node.children, key=lambda item: len(item[0]), reverse=True):
        child_tree, child_foot = _compile_node(child, grammar)
        grown = ElementaryTree(child.tree_id, AUXILIARY, child_tree, child_foot)
        try:
            tree = adjoin(tree, address, grown)
        except (AddressNotFound, NotInternal) as exc:
            raise InvalidSite(str(exc)) from None
        if foot is not None and foot[: len(address)] == address:
            foot = address + child_foot + foot[len(address):]
    return tree, foot


def expression_of(derivation: DerivationTree, grammar: Grammar) -> NarxExpression:
    """Compile a derivation and parse its yield into a canonical expression."""
    return parse_yield(yield_of(derived_tree(derivation, grammar)))


# --- random generation ------------------------------------------------------


class _MutableNode:
    __slots__ = ("tree_id", "children")

    def __init__(self, tree_id: str, children: dict | None = None):
        self.tree_id = tree_id
        self.children: dict[GornAddress, _MutableNode] = children or {}

    def freeze(self) -> DerivationNode:
        return DerivationNode(
            self.tree_id,
            tuple((address, child.freeze()) for address, child in self.children.items()),
        )

    @classmethod
    def thaw(cls, node: DerivationNode) -> "_MutableNode":
        return cls(node.tree_id, {address: cls.thaw(child) for address, child in node.children})


def _adjunction_cost(grammar: Grammar, aux_id: str) -> int:
    """Budget consumed by adjoining `aux_id`, counting forced delay repairs."""
    return 1 + len(required_delay_sites(grammar, aux_id))


def _legal_moves(grammar: Grammar, root: _MutableNode, budget_left: int, region: DerivationPath | None):
    """All affordable (node, address, aux_id) triples, in deterministic order.

    With a region, only moves whose new derivation node would sit at or below
    that path are offered; this regrows exactly the subtree a mutation freed.
    """
    moves = []

    def walk(path: DerivationPath, node: _MutableNode):
        for address, allowed in adjunction_sites(grammar, node.tree_id):
            if address in node.children:
                continue
            candidate = (*path, address)
            if region is not None and candidate[: len(region)] != region:
                continue
            for aux_id in allowed:
                cost = _adjunction_cost(grammar, aux_id)
                if cost > budget_left:
                    continue
                if cost > 1 and not all(
                    _delay_providers(grammar, aux_id, site)
                    for site in required_delay_sites(grammar, aux_id)
                ):
                    continue
                moves.append((node, address, aux_id))
        for address in sorted(node.children):
            walk((*path, address), node.children[address])

    walk((), root)
    return moves


def _apply_move(grammar: Grammar, node: _MutableNode, address: GornAddress, aux_id: str) -> int:
    """Adjoin `aux_id` at `address`, adding forced delays; returns cost."""
    child = _MutableNode(aux_id)
    node.children[address] = child
    cost = 1
    for site in required_delay_sites(grammar, aux_id):
        providers = _delay_providers(grammar, aux_id, site)
        child.children[site] = _MutableNode(providers[0])
        cost += 1
    return cost


def _grow(
    grammar: Grammar,
    root: _MutableNode,
    target: int,
    rng: np.random.Generator,
    region: DerivationPath | None = None,
) -> None:
    used = 0
    while used < target:
        moves = _legal_moves(grammar, root, target - used, region)
        if not moves:
            break
        node, address, aux_id = moves[int(rng.integers(len(moves)))]
        used += _apply_move(grammar, node, address, aux_id)


def random_derivation(grammar: Grammar, max_adjunctions: int, rng: np.random.Generator) -> DerivationTree:
    """A valid random genotype with adjunction count drawn uniformly from
    [0, max_adjunctions].

    Each step picks uniformly among all currently legal (site, auxiliary)
    pairs; trees introducing an undelayed output immediately receive a forced
    delay adjunction so every genotype stays causal.
    """
    if max_adjunctions < 0:
        raise ValueError("max_adjunctions must be nonnegative")
    initial = grammar.initial_trees[0]
    if len(grammar.initial_trees) > 1:
        initial = grammar.initial_trees[int(rng.integers(len(grammar.initial_trees)))]
    root = _MutableNode(initial.id)
    target = int(rng.integers(0, max_adjunctions + 1))
    _grow(grammar, root, target, rng)
    return DerivationTree(root.freeze())


# --- exhaustive enumeration --------------------------------------------------


def enumerate_derivations(
    grammar: Grammar, max_adjunctions: int, causal_only: bool = True
) -> Iterator[DerivationTree]:
    """Every valid derivation with at most `max_adjunctions` adjunctions.

    With causal_only, trees introducing output factors are only emitted with
    their delay sites filled, so every yield parses.
    """
    for initial in grammar.initial_trees:
        for node, _ in _enumerate_nodes(grammar, initial.id, max_adjunctions, causal_only):
            yield DerivationTree(node)


@lru_cache(maxsize=None)
def _enumerate_nodes(
    grammar: Grammar, tree_id: str, budget: int, causal_only: bool
) -> tuple[tuple[DerivationNode, int], ...]:
    sites = adjunction_sites(grammar, tree_id)
    forced = set(required_delay_sites(grammar, tree_id)) if causal_only else set()
    results: list[tuple[DerivationNode, int]] = []

    def assign(index: int, remaining: int, chosen: tuple):
        if index == len(sites):
            results.append((DerivationNode(tree_id, chosen), budget - remaining))
            return
        address, allowed = sites[index]
        if address not in forced:
            assign(index + 1, remaining, chosen)
        if remaining >= 1:
            for aux_id in allowed:
                for sub, sub_size in _enumerate_nodes(grammar, aux_id, remaining - 1, causal_only):
                    assign(index + 1, remaining - 1 - sub_size, (*chosen, (address, sub)))

    assign(0, budget, ())
    return tuple(results)


# --- constructive derivations -------------------------------------------------


def derivation_for(expression: NarxExpression, grammar: Grammar) -> DerivationTree:
    """Build a derivation of the canonical grammar that compiles to `expression`.

    This is the generative direction of the grammar: terms chain at sum-level
    root sites, extra factors chain at product-level sites, and delays stack
    at signal-level sites.
    """
    term_ids = {INPUT: ADD_INPUT_TERM, OUTPUT: ADD_OUTPUT_TERM}
    factor_ids = {INPUT: MUL_INPUT_FACTOR, OUTPUT: MUL_OUTPUT_FACTOR}
    for tree_id in (*term_ids.values(), *factor_ids.values(), ADD_DELAY):
        grammar.elementary(tree_id)

    def delay_chain(count: int) -> DerivationNode | None:
        node = None
        for _ in range(count):
            node = DerivationNode(ADD_DELAY, (((), node),) if node else ())
        return node

    def site_of(tree_id: str, label) -> GornAddress:
        for address, allowed in adjunction_sites(grammar, tree_id):
            if grammar.elementary(allowed[0]).tree.label == label:
                return address
        raise UnknownTreeId(f"{tree_id!r} offers no site labeled {label.name!r}")

    def term_node(term, chain_next: DerivationNode | None) -> DerivationNode:
        flat = [
            (factor.signal, factor.delay)
            for factor in term.factors
            for _ in range(factor.exponent)
        ]
        head_signal, head_delay = flat[0]
        base_id = term_ids[head_signal]
        factor_tail = None
        for signal, delay in reversed(flat[1:]):
            factor_id = factor_ids[signal]
            children = []
            if factor_tail is not None:
                children.append(((), factor_tail))
            delays = delay_chain(delay)
            if delays is not None:
                children.append((site_of(factor_id, _SIGNAL), delays))
            factor_tail = DerivationNode(factor_id, tuple(children))
        children = []
        if chain_next is not None:
            children.append(((), chain_next))
        if factor_tail is not None:
            children.append((site_of(base_id, _PRODUCT), factor_tail))
        head_delays = delay_chain(head_delay)
        if head_delays is not None:
            children.append((site_of(base_id, _SIGNAL), head_delays))
        return DerivationNode(base_id, tuple(children))

    tail = None
    for term in reversed(expression.terms):
        tail = term_node(term, tail)
    root_children = (((), tail),) if tail is not None else ()
    initial = grammar.initial_trees[0]
    return DerivationTree(DerivationNode(initial.id, root_children))
