"""Semantics-preserving rewrites of the active part of a circuit.

Each rule matches a pattern made of *active* nodes (reachable from an
output) and, for forward rules, some *neutral* nodes (unreachable function
nodes) that get absorbed. Rewrites never overwrite a shared active node:
they relabel an active root, absorb neutral nodes, or retarget a single
consumer edge, so every other consumer keeps its value.

Matches are counted the way an injective graph matcher counts them:
operands are bound by out-edge position, and absorbed neutral nodes are an
ordered choice of distinct nodes. Rule-set application picks an applicable
rule uniformly, then one of its matches uniformly.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Callable, Iterator

from .circuit_graph import AON, Edge, FunctionKind, Individual, active_mask

AND, OR, NOT = FunctionKind.AND, FunctionKind.OR, FunctionKind.NOT


class RuleId(enum.Enum):
    DeMorganF1 = "DeMorganF1"
    DeMorganF2 = "DeMorganF2"
    DeMorganR1 = "DeMorganR1"
    DeMorganR2 = "DeMorganR2"
    IdAndF = "IdAndF"
    IdAndR = "IdAndR"
    IdOrF = "IdOrF"
    IdOrR = "IdOrR"
    IdNotF = "IdNotF"
    IdNotR = "IdNotR"
    Copy1 = "Copy1"
    Copy2 = "Copy2"
    Collapse1 = "Collapse1"
    Collapse2 = "Collapse2"

    @property
    def inverse(self) -> "RuleId":
        return _INVERSE[self]

    @property
    def is_forward(self) -> bool:
        return self in _FORWARD


_INVERSE = {
    RuleId.DeMorganF1: RuleId.DeMorganR1,
    RuleId.DeMorganF2: RuleId.DeMorganR2,
    RuleId.IdAndF: RuleId.IdAndR,
    RuleId.IdOrF: RuleId.IdOrR,
    RuleId.IdNotF: RuleId.IdNotR,
    RuleId.Copy1: RuleId.Collapse1,
    RuleId.Copy2: RuleId.Collapse2,
}
_INVERSE.update({v: k for k, v in list(_INVERSE.items())})
_FORWARD = frozenset(
    {
        RuleId.DeMorganF1,
        RuleId.DeMorganF2,
        RuleId.IdAndF,
        RuleId.IdOrF,
        RuleId.IdNotF,
        RuleId.Copy1,
        RuleId.Copy2,
    }
)

_DM = (RuleId.DeMorganF1, RuleId.DeMorganF2, RuleId.DeMorganR1, RuleId.DeMorganR2)
_ID = (RuleId.IdAndF, RuleId.IdAndR, RuleId.IdOrF, RuleId.IdOrR, RuleId.IdNotF, RuleId.IdNotR)

RULESETS: dict[str, tuple[RuleId, ...]] = {
    "none": (),
    "dm": _DM,
    "dmn": _DM + (RuleId.IdNotF, RuleId.IdNotR),
    "id": _ID,
    "cc": (RuleId.Collapse1, RuleId.Collapse2, RuleId.Copy1, RuleId.Copy2),
    "dmid": _DM + _ID,
}


@dataclass(frozen=True)
class RuleSet:
    name: str
    rules: tuple[RuleId, ...]

    @classmethod
    def named(cls, name: str) -> "RuleSet":
        key = name.lower()
        if key not in RULESETS:
            raise ValueError(f"unknown rule set {name!r} (known: {', '.join(RULESETS)})")
        return cls(key, RULESETS[key])

    @property
    def required_kinds(self) -> frozenset[FunctionKind]:
        """Function kinds the rules write into the graph."""
        if any(r.name.startswith(("DeMorgan", "Id")) for r in self.rules):
            return frozenset(AON)
        return frozenset()


@dataclass(frozen=True)
class Match:
    """One injective binding of a rule's pattern.

    ``nodes`` maps role names to node ids; ``edge`` is the consumer edge the
    rule retargets, if any; ``neutral`` lists absorbed nodes in role order.
    """

    rule: RuleId
    nodes: tuple[tuple[str, int], ...]
    edge: Edge | None
    neutral: tuple[int, ...]

    def __getitem__(self, role: str) -> int:
        for name, v in self.nodes:
            if name == role:
                return v
        raise KeyError(role)

    @property
    def bindings(self) -> dict[str, int]:
        return dict(self.nodes)

    def key(self) -> tuple:
        return (self.rule.value, self.nodes, self.edge, self.neutral)


class StaleMatchError(ValueError):
    pass


# A site is the active part of a match: (role bindings, retargeted edge).
Site = tuple[tuple[tuple[str, int], ...], "Edge | None"]


class _Context:
    """Activity and pattern-root information for one individual state.

    A single pass over the active function nodes records the roots of every
    node pattern; edge lists and in-edges are built only on demand.
    """

    def __init__(self, ind: Individual) -> None:
        self.ind = ind
        n_in = ind.num_inputs
        first_out = ind.first_output
        edges, kinds = ind.edges, ind.kinds
        act = self.active = active_mask(ind)
        self.neutral = [v for v in range(n_in, first_out) if not act[v]]

        roots: dict[str, list] = {
            "not_and": [], "not_or": [], "or_nots": [], "and_nots": [],
            "and_same": [], "or_same": [], "not_not": [], "share1": [], "share2": [],
        }
        for v in range(n_in, first_out):
            if not act[v]:
                continue
            k = kinds[v]
            e = edges[v]
            if k == NOT:
                roots["share1"].append(v)
                m = e[0]
                if n_in <= m < first_out:
                    km = kinds[m]
                    if km == NOT:
                        roots["not_not"].append(v)
                    elif km == AND or km == OR:
                        a, b = edges[m]
                        if a != b:
                            roots["not_and" if km == AND else "not_or"].append(v)
                continue
            a, b = e
            if a == b:
                if k == AND:
                    roots["and_same"].append(v)
                elif k == OR:
                    roots["or_same"].append(v)
                continue
            roots["share2"].append(v)
            if (k == AND or k == OR) and n_in <= a < first_out and n_in <= b < first_out:
                if kinds[a] == NOT and kinds[b] == NOT:
                    ta, tb = edges[a][0], edges[b][0]
                    if ta != tb and ta != b and tb != a:
                        roots["or_nots" if k == OR else "and_nots"].append(v)
        self.roots = roots
        self._active_edges: list[Edge] | None = None
        self._in_edges: list[list[Edge]] | None = None

    @property
    def active_edges(self) -> list[Edge]:
        """Edges whose source is active (output edges included)."""
        if self._active_edges is None:
            ind, act = self.ind, self.active
            edges = ind.edges
            self._active_edges = [
                (u, p)
                for u in range(ind.num_inputs, ind.num_nodes)
                if act[u]
                for p in range(len(edges[u]))
            ]
        return self._active_edges

    @property
    def in_edges(self) -> list[list[Edge]]:
        """in_edges[v]: active edges that point at v."""
        if self._in_edges is None:
            edges = self.ind.edges
            lists: list[list[Edge]] = [[] for _ in range(self.ind.num_nodes)]
            for u, p in self.active_edges:
                lists[edges[u][p]].append((u, p))
            self._in_edges = lists
        return self._in_edges


# -- site finders -----------------------------------------------------------
#
# Each finder returns the active part of every match; ``exists`` answers
# applicability without building the full list where that is cheaper.


def _demorgan_forward_sites(key: str) -> Callable[[_Context], list[Site]]:
    def find(ctx: _Context) -> list[Site]:
        edges = ctx.ind.edges
        out = []
        for r in ctx.roots[key]:
            m = edges[r][0]
            a, b = edges[m]
            out.append(((("r", r), ("m", m), ("a", a), ("b", b)), None))
        return out

    return find


def _demorgan_reverse_sites(key: str) -> Callable[[_Context], list[Site]]:
    def find(ctx: _Context) -> list[Site]:
        edges = ctx.ind.edges
        out = []
        for r in ctx.roots[key]:
            n1, n2 = edges[r]
            a, b = edges[n1][0], edges[n2][0]
            out.append(((("r", r), ("n1", n1), ("n2", n2), ("a", a), ("b", b)), None))
        return out

    return find


def _edge_sites(ctx: _Context) -> list[Site]:
    edges = ctx.ind.edges
    return [((("u", u), ("v", edges[u][p])), (u, p)) for u, p in ctx.active_edges]


def _idempotent_reverse_sites(key: str) -> Callable[[_Context], list[Site]]:
    def find(ctx: _Context) -> list[Site]:
        edges = ctx.ind.edges
        out = []
        for x in ctx.roots[key]:
            v = edges[x][0]
            for e in ctx.in_edges[x]:
                out.append(((("u", e[0]), ("x", x), ("v", v)), e))
        return out

    return find


def _double_negation_sites(ctx: _Context) -> list[Site]:
    edges = ctx.ind.edges
    out = []
    for n1 in ctx.roots["not_not"]:
        n2 = edges[n1][0]
        v = edges[n2][0]
        for e in ctx.in_edges[n1]:
            out.append(((("u", e[0]), ("n1", n1), ("n2", n2), ("v", v)), e))
    return out


def _copy_sites(arity: int) -> Callable[[_Context], list[Site]]:
    key = f"share{arity}"

    def find(ctx: _Context) -> list[Site]:
        out = []
        for x in ctx.roots[key]:
            ins = ctx.in_edges[x]
            if len(ins) < 2 or len({u for u, _ in ins}) < 2:
                continue
            for e in ins:
                out.append(((("u", e[0]), ("x", x)), e))
        return out

    return find


def _collapse_sites(arity: int) -> Callable[[_Context], list[Site]]:
    key = f"share{arity}"

    def find(ctx: _Context) -> list[Site]:
        ind = ctx.ind
        groups: dict[tuple, list[int]] = {}
        for v in ctx.roots[key]:
            sig = (ind.kinds[v], tuple(sorted(ind.edges[v])))
            groups.setdefault(sig, []).append(v)
        out = []
        for members in groups.values():
            if len(members) < 2:
                continue
            for y in members:
                for e in ctx.in_edges[y]:
                    for x in members:
                        if x != y:
                            out.append(((("u", e[0]), ("x", x), ("y", y)), e))
        return out

    return find


def _has_roots(key: str) -> Callable[[_Context], bool]:
    # every active function node has at least one active in-edge, so a
    # root alone witnesses a match
    return lambda ctx: bool(ctx.roots[key])


def _always(ctx: _Context) -> bool:
    return True


# -- rewrites ---------------------------------------------------------------


def _roles(site: Site) -> dict[str, int]:
    return dict(site[0])


def _apply_demorgan_forward(new_root: FunctionKind):
    def apply(ind: Individual, site: Site, neutral: tuple[int, ...]) -> None:
        b = _roles(site)
        w1, w2 = neutral
        ind.kinds[w1] = NOT
        ind.edges[w1] = (b["a"],)
        ind.kinds[w2] = NOT
        ind.edges[w2] = (b["b"],)
        ind.kinds[b["r"]] = new_root
        ind.edges[b["r"]] = (w1, w2)

    return apply


def _apply_demorgan_reverse(inner: FunctionKind):
    def apply(ind: Individual, site: Site, neutral: tuple[int, ...]) -> None:
        b = _roles(site)
        (w,) = neutral
        ind.kinds[w] = inner
        ind.edges[w] = (b["a"], b["b"])
        ind.kinds[b["r"]] = NOT
        ind.edges[b["r"]] = (w,)

    return apply


def _apply_idempotent_forward(kind: FunctionKind):
    def apply(ind: Individual, site: Site, neutral: tuple[int, ...]) -> None:
        (w,) = neutral
        v = _roles(site)["v"]
        ind.kinds[w] = kind
        ind.edges[w] = (v, v)
        ind.set_target(site[1], w)

    return apply


def _apply_double_negation_forward(ind: Individual, site: Site, neutral: tuple[int, ...]) -> None:
    w1, w2 = neutral
    v = _roles(site)["v"]
    ind.kinds[w1] = NOT
    ind.edges[w1] = (w2,)
    ind.kinds[w2] = NOT
    ind.edges[w2] = (v,)
    ind.set_target(site[1], w1)


def _apply_retarget(role: str):
    def apply(ind: Individual, site: Site, neutral: tuple[int, ...]) -> None:
        ind.set_target(site[1], _roles(site)[role])

    return apply


def _apply_copy(ind: Individual, site: Site, neutral: tuple[int, ...]) -> None:
    (w,) = neutral
    x = _roles(site)["x"]
    ind.kinds[w] = ind.kinds[x]
    ind.edges[w] = ind.edges[x]
    ind.set_target(site[1], w)


@dataclass(frozen=True)
class _Rule:
    find: Callable[[_Context], list[Site]]
    n_neutral: int
    apply: Callable[[Individual, Site, tuple[int, ...]], None]
    neutral_roles: tuple[str, ...] = ()
    exists: Callable[[_Context], bool] | None = None


_RULES: dict[RuleId, _Rule] = {
    RuleId.DeMorganF1: _Rule(
        _demorgan_forward_sites("not_and"), 2, _apply_demorgan_forward(OR), ("w1", "w2"),
        _has_roots("not_and"),
    ),
    RuleId.DeMorganF2: _Rule(
        _demorgan_forward_sites("not_or"), 2, _apply_demorgan_forward(AND), ("w1", "w2"),
        _has_roots("not_or"),
    ),
    RuleId.DeMorganR1: _Rule(
        _demorgan_reverse_sites("or_nots"), 1, _apply_demorgan_reverse(AND), ("w",),
        _has_roots("or_nots"),
    ),
    RuleId.DeMorganR2: _Rule(
        _demorgan_reverse_sites("and_nots"), 1, _apply_demorgan_reverse(OR), ("w",),
        _has_roots("and_nots"),
    ),
    # outputs always own an active edge
    RuleId.IdAndF: _Rule(_edge_sites, 1, _apply_idempotent_forward(AND), ("w",), _always),
    RuleId.IdOrF: _Rule(_edge_sites, 1, _apply_idempotent_forward(OR), ("w",), _always),
    RuleId.IdNotF: _Rule(_edge_sites, 2, _apply_double_negation_forward, ("w1", "w2"), _always),
    RuleId.IdAndR: _Rule(
        _idempotent_reverse_sites("and_same"), 0, _apply_retarget("v"), (), _has_roots("and_same")
    ),
    RuleId.IdOrR: _Rule(
        _idempotent_reverse_sites("or_same"), 0, _apply_retarget("v"), (), _has_roots("or_same")
    ),
    RuleId.IdNotR: _Rule(_double_negation_sites, 0, _apply_retarget("v"), (), _has_roots("not_not")),
    RuleId.Copy1: _Rule(_copy_sites(1), 1, _apply_copy, ("w",)),
    RuleId.Copy2: _Rule(_copy_sites(2), 1, _apply_copy, ("w",)),
    RuleId.Collapse1: _Rule(_collapse_sites(1), 0, _apply_retarget("x")),
    RuleId.Collapse2: _Rule(_collapse_sites(2), 0, _apply_retarget("x")),
}


def _perm(k: int, r: int) -> int:
    out = 1
    for j in range(r):
        out *= k - j
    return max(out, 0)


def _neutral_tuples(pool: list[int], r: int) -> Iterator[tuple[int, ...]]:
    if r == 0:
        yield ()
    elif r == 1:
        for w in pool:
            yield (w,)
    else:
        for w1 in pool:
            for w2 in pool:
                if w1 != w2:
                    yield (w1, w2)


def _sites(ctx: _Context, rule: RuleId) -> list[Site]:
    spec = _RULES[rule]
    if len(ctx.neutral) < spec.n_neutral:
        return []
    return spec.find(ctx)


def _make_match(rule: RuleId, site: Site, neutral: tuple[int, ...]) -> Match:
    names = _RULES[rule].neutral_roles
    return Match(rule, site[0] + tuple(zip(names, neutral)), site[1], neutral)


def enumerate_matches(ind: Individual, rule: RuleId) -> list[Match]:
    """Every match of ``rule`` on ``ind`` (may be large for neutral-hungry rules)."""
    ctx = _Context(ind)
    r = _RULES[rule].n_neutral
    return [
        _make_match(rule, site, ws)
        for site in _sites(ctx, rule)
        for ws in _neutral_tuples(ctx.neutral, r)
    ]


def count_matches(ind: Individual, rule: RuleId) -> int:
    ctx = _Context(ind)
    return len(_sites(ctx, rule)) * _perm(len(ctx.neutral), _RULES[rule].n_neutral)


def apply_match(ind: Individual, m: Match) -> None:
    """Rewrite ``ind`` in place; raises :class:`StaleMatchError` if ``m`` no longer matches."""
    ctx = _Context(ind)
    site = (m.nodes[: len(m.nodes) - len(m.neutral)], m.edge)
    pool = set(ctx.neutral)
    ok = (
        len(set(m.neutral)) == len(m.neutral) == _RULES[m.rule].n_neutral
        and all(w in pool for w in m.neutral)
        and site in _sites(ctx, m.rule)
    )
    if not ok:
        raise StaleMatchError(f"{m.rule.value} match does not apply to this individual")
    _RULES[m.rule].apply(ind, site, m.neutral)


def apply_ruleset(ind: Individual, rs: RuleSet, rng: random.Random) -> RuleId | None:
    """Apply one uniformly chosen applicable rule at a uniformly chosen match.

    Returns the rule applied, or ``None`` (leaving ``ind`` untouched) when no
    rule in ``rs`` has a match.
    """
    if not rs.rules:
        return None
    ctx = _Context(ind)
    k = len(ctx.neutral)
    applicable = []
    cached: dict[RuleId, list[Site]] = {}
    for rule in rs.rules:
        spec = _RULES[rule]
        if k < spec.n_neutral:
            continue
        if spec.exists is not None:
            if spec.exists(ctx):
                applicable.append(rule)
        else:
            sites = cached[rule] = spec.find(ctx)
            if sites:
                applicable.append(rule)
    if not applicable:
        return None
    rule = applicable[rng.randrange(len(applicable))]
    spec = _RULES[rule]
    sites = cached[rule] if rule in cached else spec.find(ctx)
    # every site carries the same number of neutral choices, so a uniform
    # site plus a uniform ordered neutral draw is a uniform match
    site = sites[rng.randrange(len(sites))]
    neutral = tuple(rng.sample(ctx.neutral, spec.n_neutral)) if spec.n_neutral else ()
    spec.apply(ind, site, neutral)
    return rule
