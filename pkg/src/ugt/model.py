"""Core model: arenas, subtree lattices, information sets, and axiom validation.

An unaware game couples a fixed physical arena (a finite arborescence with
per-node action sets and terminal payoffs) with a join-semilattice of subtrees
and an information-set assignment.  A node is identified by ``(tree, name)``;
the copy of a node in a lower tree shares its name, which makes the copy table
the identity on names and keeps commutation trivial (and testable).
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional

NATURE = 0

Nd = tuple[str, str]  # (tree id, node name)


class GameError(Exception):
    """Raised for precondition faults on otherwise well-formed games."""


class CapExceeded(GameError):
    """Raised when an enumeration exceeds its configured size guard."""


@dataclass(frozen=True)
class ArenaNode:
    name: str
    active: tuple[int, ...]  # ascending player ids; empty at terminal nodes
    actions: Mapping[int, tuple[str, ...]]  # per active player, declared order
    parent: Optional[tuple[str, tuple[str, ...]]]  # (parent, action profile)
    payoffs: Optional[tuple[Fraction, ...]]  # terminal nodes only

    @property
    def is_terminal(self) -> bool:
        return self.payoffs is not None


class Arena:
    """The physical tree: all players, moves, and payoffs."""

    def __init__(self, players: int, has_nature: bool, nodes: Iterable[ArenaNode]):
        self.players = players
        self.has_nature = has_nature
        self.nodes: dict[str, ArenaNode] = {}
        self.children: dict[str, dict[tuple[str, ...], str]] = {}
        root = None
        for node in nodes:
            if node.name in self.nodes:
                raise GameError(f"duplicate node {node.name!r}")
            self.nodes[node.name] = node
            self.children[node.name] = {}
            if node.parent is None:
                if root is not None:
                    raise GameError("multiple root nodes")
                root = node.name
        if root is None:
            raise GameError("no root node")
        self.root = root
        for node in self.nodes.values():
            if node.parent is not None:
                pname, profile = node.parent
                if pname not in self.nodes:
                    raise GameError(f"unknown parent {pname!r} of {node.name!r}")
                if profile in self.children[pname]:
                    raise GameError(f"duplicate edge {pname!r}.{profile}")
                self.children[pname][profile] = node.name

    def player_ids(self) -> tuple[int, ...]:
        return tuple(range(1, self.players + 1))

    def active_at(self, name: str) -> tuple[int, ...]:
        """P(n); extended to terminal nodes by P(z) = I."""
        node = self.nodes[name]
        if node.is_terminal:
            return self.player_ids()
        return node.active

    def depth_order(self) -> list[str]:
        """Preorder with children sorted by action profile."""
        out: list[str] = []

        def rec(name: str) -> None:
            out.append(name)
            for profile in sorted(self.children[name]):
                rec(self.children[name][profile])

        rec(self.root)
        return out


@dataclass(frozen=True)
class Tree:
    """A subtree: retained node names plus per-(node, player) action subsets."""

    tid: str
    node_names: frozenset[str]
    actions: Mapping[tuple[str, int], tuple[str, ...]]

    def has(self, name: str) -> bool:
        return name in self.node_names


class TreeLattice:
    """Finite family of subtrees ordered by node-set inclusion."""

    def __init__(self, arena: Arena, trees: Iterable[Tree], top: str):
        self.arena = arena
        self.trees: dict[str, Tree] = {}
        for tree in trees:
            if tree.tid in self.trees:
                raise GameError(f"duplicate tree {tree.tid!r}")
            self.trees[tree.tid] = tree
        if top not in self.trees:
            raise GameError(f"unknown top tree {top!r}")
        self.top = top
        self._children: dict[str, dict[str, dict[tuple[str, ...], str]]] = {}
        for tid, tree in self.trees.items():
            per: dict[str, dict[tuple[str, ...], str]] = {}
            for name in tree.node_names:
                per[name] = {
                    prof: child
                    for prof, child in arena.children[name].items()
                    if child in tree.node_names
                    and all(
                        prof[k] in tree.actions.get((name, j), ())
                        for k, j in enumerate(arena.nodes[name].active)
                    )
                }
            self._children[tid] = per

    def order(self) -> list[str]:
        """Canonical tree order: descending by ≼ (top first), ties by id."""
        tids = list(self.trees)
        tids.sort(key=lambda t: (-len(self.trees[t].node_names), t))
        # stable topological refinement: a tree never precedes one above it
        out: list[str] = []
        placed: set[str] = set()
        while tids:
            for t in tids:
                if all(not self.lt(t, u) for u in tids if u != t):
                    out.append(t)
                    placed.add(t)
                    tids.remove(t)
                    break
            else:  # pragma: no cover - inclusion order is acyclic
                out.extend(tids)
                break
        return out

    def leq(self, t1: str, t2: str) -> bool:
        return self.trees[t1].node_names <= self.trees[t2].node_names

    def lt(self, t1: str, t2: str) -> bool:
        return self.leq(t1, t2) and t1 != t2

    def comparable(self, t1: str, t2: str) -> bool:
        return self.leq(t1, t2) or self.leq(t2, t1)

    def join(self, t1: str, t2: str) -> str:
        """Least upper bound of two trees under ≼."""
        uppers = [t for t in self.trees if self.leq(t1, t) and self.leq(t2, t)]
        minimal = [t for t in uppers if not any(self.lt(u, t) for u in uppers)]
        if len(minimal) != 1:
            raise GameError(f"no unique join of {t1!r} and {t2!r}")
        return minimal[0]

    def join_all(self, tids: Iterable[str]) -> str:
        it = iter(tids)
        try:
            acc = next(it)
        except StopIteration:
            raise GameError("join of empty tree family") from None
        for t in it:
            acc = self.join(acc, t)
        return acc

    def children_in(self, tid: str, name: str) -> dict[tuple[str, ...], str]:
        return self._children[tid][name]

    def copy_in(self, tid: str, name: str) -> Optional[Nd]:
        """The copy of an arena node in tree tid, if present."""
        if self.trees[tid].has(name):
            return (tid, name)
        return None

    def roots(self, tid: str) -> list[str]:
        tree = self.trees[tid]
        return [
            n
            for n in tree.node_names
            if self.arena.nodes[n].parent is None
            or self.arena.nodes[n].parent[0] not in tree.node_names
        ]

    def terminal_in(self, tid: str, name: str) -> bool:
        return not self._children[tid][name]

    def node_actions(self, tid: str, name: str, player: int) -> tuple[str, ...]:
        return self.trees[tid].actions.get((name, player), ())


@dataclass(frozen=True)
class InfoSet:
    """An information set: a player's indistinguishability class of node copies."""

    player: int
    members: tuple[Nd, ...]

    @property
    def host(self) -> Optional[str]:
        """Tree containing the set; None when members straddle trees."""
        tids = {t for t, _ in self.members}
        return next(iter(tids)) if len(tids) == 1 else None

    @property
    def anchor(self) -> Nd:
        return min(self.members)

    @property
    def label(self) -> str:
        t, n = self.anchor
        return f"{self.player}@{t}.{n}"

    def __contains__(self, nd: Nd) -> bool:
        return nd in self.members


@dataclass(frozen=True)
class Violation:
    axiom: str
    witness: tuple[str, ...]
    detail: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def tags(self) -> set[str]:
        return {v.axiom for v in self.violations}

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(
            f"{v.axiom} at ({', '.join(v.witness)}): {v.detail}"
            for v in self.violations
        )


class UnawareGame:
    """An extensive-form game with unawareness."""

    def __init__(
        self,
        name: str,
        arena: Arena,
        lattice: TreeLattice,
        infosets: Mapping[tuple[Nd, int], InfoSet],
    ):
        self.name = name
        self.arena = arena
        self.lattice = lattice
        self.infosets = dict(infosets)
        self._cache: dict = {}

    # -- basic queries ------------------------------------------------

    def tree_ids(self) -> list[str]:
        return self.lattice.order()

    def all_nodes(self) -> Iterator[Nd]:
        for tid in self.tree_ids():
            tree = self.lattice.trees[tid]
            for name in self.arena.depth_order():
                if tree.has(name):
                    yield (tid, name)

    def active_players(self, nd: Nd) -> tuple[int, ...]:
        return self.arena.active_at(nd[1])

    def infoset(self, nd: Nd, player: int) -> InfoSet:
        key = (nd, player)
        if key not in self.infosets:
            raise GameError(f"no information set for player {player} at {nd}")
        return self.infosets[key]

    def player_infosets(self, player: int) -> list[InfoSet]:
        """Canonically ordered distinct information sets of one player."""
        key = ("H", player)
        if key not in self._cache:
            order = {nd: k for k, nd in enumerate(self.all_nodes())}
            seen: dict[tuple, InfoSet] = {}
            for (nd, i), h in self.infosets.items():
                if i == player:
                    seen.setdefault((i, h.members), h)
            sets = sorted(
                seen.values(),
                key=lambda h: min((order.get(m, 10**9) for m in h.members), default=10**9),
            )
            self._cache[key] = sets
        return self._cache[key]

    def payoff_at(self, name: str, player: int) -> Fraction:
        node = self.arena.nodes[name]
        if node.payoffs is None:
            raise GameError(f"{name!r} is not a terminal node")
        return node.payoffs[player - 1]

    def is_decision_set(self, h: InfoSet) -> bool:
        return not self.arena.nodes[h.members[0][1]].is_terminal

    def set_actions(self, h: InfoSet) -> tuple[str, ...]:
        """A_h: the (validated equal) tree-local action set at the members."""
        t, n = h.anchor
        return self.lattice.node_actions(t, n, h.player)

    # -- identity -----------------------------------------------------

    def canonical_text(self) -> str:
        if "text" not in self._cache:
            from . import fileformat

            self._cache["text"] = fileformat.serialize(self)
        return self._cache["text"]

    def state_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]

    def __eq__(self, other) -> bool:
        return isinstance(other, UnawareGame) and self.canonical_text() == other.canonical_text()

    def __hash__(self) -> int:
        return hash(self.canonical_text())

    # -- validation ---------------------------------------------------

    def validation(self) -> ValidationReport:
        if "validation" not in self._cache:
            self._cache["validation"] = validate(self)
        return self._cache["validation"]

    def require_valid(self) -> None:
        report = self.validation()
        if not report.ok:
            raise GameError(f"game {self.name!r} fails validation:\n{report}")


# ---------------------------------------------------------------------------
# lattice operations


def join_tree(lattice: TreeLattice, t1: str, t2: str) -> str:
    return lattice.join(t1, t2)


def copy_down(lattice: TreeLattice, nd: Nd, t: str) -> Optional[Nd]:
    """n_t, the copy of nd in tree t; None when absent.  Requires t ≼ T_n."""
    tid, name = nd
    if not lattice.leq(t, tid):
        raise GameError(f"tree {t!r} is not below {tid!r}")
    return lattice.copy_in(t, name)


def hooks_edges(game: UnawareGame) -> dict[str, set[str]]:
    """The ↣ relation between distinct trees via information-set hosts."""
    edges: dict[str, set[str]] = {t: set() for t in game.lattice.trees}
    for (nd, _i), h in game.infosets.items():
        host = h.host
        if host is not None and host != nd[0]:
            edges[nd[0]].add(host)
    return edges


def hooks_closure(game: UnawareGame, t: str) -> set[str]:
    """{T' : t ↪ T'}, the transitive closure of ↣ from t."""
    edges = hooks_edges(game)
    out: set[str] = set()
    frontier = [t]
    while frontier:
        cur = frontier.pop()
        for nxt in edges[cur]:
            if nxt not in out:
                out.add(nxt)
                frontier.append(nxt)
    return out


def t_partial(game: UnawareGame, t: str) -> UnawareGame:
    """The t-partial game: restriction to {t} ∪ {T' : t ↪ T'}."""
    if t not in game.lattice.trees:
        raise GameError(f"unknown tree {t!r}")
    keep = {t} | hooks_closure(game, t)
    top = t
    for u in keep:
        if game.lattice.leq(top, u):
            top = u
    trees = [game.lattice.trees[u] for u in keep]
    lattice = TreeLattice(game.arena, trees, top)
    infosets = {
        (nd, i): h for (nd, i), h in game.infosets.items() if nd[0] in keep
    }
    return UnawareGame(f"{game.name}#{t}", game.arena, lattice, infosets)


# ---------------------------------------------------------------------------
# validation


def _root_path(game: UnawareGame, nd: Nd) -> list[Nd]:
    """Nodes from the tree-local root down to nd (inclusive)."""
    tid, name = nd
    tree = game.lattice.trees[tid]
    path = [name]
    cur = game.arena.nodes[name]
    while cur.parent is not None and tree.has(cur.parent[0]):
        path.append(cur.parent[0])
        cur = game.arena.nodes[cur.parent[0]]
    return [(tid, n) for n in reversed(path)]


def _edge_action(game: UnawareGame, parent: Nd, child_name: str, player: int) -> Optional[str]:
    """The action component player takes at parent on the edge toward child_name."""
    node = game.arena.nodes[child_name]
    while node.parent is not None and node.parent[0] != parent[1]:
        node = game.arena.nodes[node.parent[0]]
    if node.parent is None:
        return None
    pname, profile = node.parent
    active = game.arena.nodes[pname].active
    if player not in active:
        return None
    return profile[active.index(player)]


def validate(game: UnawareGame) -> ValidationReport:
    """Check every structural property and unawareness axiom; report all violations."""
    bad: list[Violation] = []
    arena = game.arena
    lat = game.lattice

    def flag(axiom: str, witness: Iterable[str], detail: str) -> None:
        bad.append(Violation(axiom, tuple(witness), detail))

    # ARBOR: each tree is an arborescence sharing the arena root.
    for tid in lat.trees:
        roots = lat.roots(tid)
        if len(roots) != 1 or roots[0] != arena.root:
            flag("ARBOR", (tid,), f"tree roots {sorted(roots)} (expected [{arena.root!r}])")
            continue
        seen: set[str] = set()
        stack = [arena.root]
        while stack:
            cur = stack.pop()
            seen.add(cur)
            stack.extend(lat.children_in(tid, cur).values())
        missing = lat.trees[tid].node_names - seen
        if missing:
            flag("ARBOR", (tid, min(missing)), "node unreachable from the tree root")

    # P1: no new terminal nodes.
    for tid in lat.trees:
        for name in sorted(lat.trees[tid].node_names):
            if lat.terminal_in(tid, name) and not arena.nodes[name].is_terminal:
                flag("P1", (tid, name), "decision node is terminal inside the tree")

    # P2: per-node restricted action boxes map onto in-tree successors.
    for tid in lat.trees:
        for name in sorted(lat.trees[tid].node_names):
            node = arena.nodes[name]
            if node.is_terminal:
                continue
            box = []
            ok = True
            for j in node.active:
                acts = lat.node_actions(tid, name, j)
                if not acts:
                    flag("P2", (tid, name, str(j)), "empty restricted action set")
                    ok = False
                if not set(acts) <= set(node.actions[j]):
                    flag("P2", (tid, name, str(j)), "restricted actions not a subset")
                    ok = False
                box.append(acts)
            if not ok:
                continue
            expected = {prof for prof in itertools.product(*box)}
            present = set(lat.children_in(tid, name))
            if expected != present:
                flag("P2", (tid, name), "successors do not match the restricted action box")

    # P3: action-set overlap implies equality within a tree.
    for tid in lat.trees:
        per_player: dict[int, list[tuple[str, frozenset[str]]]] = {}
        for name in sorted(lat.trees[tid].node_names):
            node = arena.nodes[name]
            if node.is_terminal:
                continue
            for j in node.active:
                per_player.setdefault(j, []).append(
                    (name, frozenset(lat.node_actions(tid, name, j)))
                )
        for j, entries in sorted(per_player.items()):
            for (n1, a1), (n2, a2) in itertools.combinations(entries, 2):
                if a1 & a2 and a1 != a2:
                    flag("P3", (tid, n1, n2, str(j)), "overlapping but unequal action sets")

    # COPIES: commuting copies (identity on names; checked exhaustively).
    tids = list(lat.trees)
    for name in arena.depth_order():
        holders = [t for t in tids if lat.trees[t].has(name)]
        for t2 in holders:
            for t1 in holders:
                if not lat.leq(t1, t2):
                    continue
                for t0 in holders:
                    if not lat.leq(t0, t1):
                        continue
                    direct = copy_down(lat, (t2, name), t0)
                    via = copy_down(lat, (t1, name), t0)
                    if direct != via:  # pragma: no cover - identity by construction
                        flag("COPIES", (name, t0, t1, t2), "copies do not commute")

    # Information-set shape: defined exactly for active players, nonempty,
    # members inside one tree, members active, members exist.
    expected_keys = set()
    for nd in game.all_nodes():
        for i in game.active_players(nd):
            expected_keys.add((nd, i))
    for key in sorted(expected_keys - set(game.infosets)):
        flag("U0", (key[0][0], key[0][1], str(key[1])), "missing information set")
    for key in sorted(set(game.infosets) - expected_keys):
        flag("U0", (key[0][0], key[0][1], str(key[1])), "information set for inactive player")

    for (nd, i), h in sorted(game.infosets.items()):
        if not h.members:
            flag("U0", (nd[0], nd[1], str(i)), "empty information set")
            continue
        if h.host is None:
            flag("U0", (nd[0], nd[1], str(i)), "information set straddles several trees")
            continue
        for (mt, mn) in h.members:
            if mt not in lat.trees or not lat.trees[mt].has(mn):
                flag("U0", (mt, mn, str(i)), "information-set member not in its tree")
            elif i not in game.active_players((mt, mn)):
                flag("I2", (mt, mn, str(i)), "member node where the player is inactive")

    def hset(nd: Nd, i: int) -> Optional[InfoSet]:
        return game.infosets.get((nd, i))

    # U0 confined awareness / U1 generalized reflexivity.
    for (nd, i), h in sorted(game.infosets.items()):
        host = h.host
        if host is None:
            continue
        if not lat.leq(host, nd[0]):
            flag("U0", (nd[0], nd[1], str(i)), f"host {host!r} not below {nd[0]!r}")
            continue
        if lat.trees[host].has(nd[1]) and (host, nd[1]) not in h:
            flag("U1", (nd[0], nd[1], str(i)), "existing copy missing from own information set")

    # I2 introspection.
    for (nd, i), h in sorted(game.infosets.items()):
        for m in h.members:
            hm = hset(m, i)
            if hm is not None and hm.members != h.members:
                flag("I2", (nd[0], nd[1], str(i)), f"member {m} carries a different set")

    # I3 no divining of unimaginable paths (decision-node paths).
    for (nd, i), h in sorted(game.infosets.items()):
        host = h.host
        if host is None:
            continue
        for m in h.members:
            if m[0] != host:
                continue
            stack = list(lat.children_in(host, m[1]).values())
            while stack:
                cur = stack.pop()
                stack.extend(lat.children_in(host, cur).values())
                if arena.nodes[cur].is_terminal or i not in arena.nodes[cur].active:
                    continue
                hh = hset((host, cur), i)
                if hh is not None and hh.host != host:
                    flag("I3", (host, cur, str(i)), f"successor set leaves tree {host!r}")

    # I4 no imaginary actions (and equal action sets across members).
    for (nd, i), h in sorted(game.infosets.items()):
        if arena.nodes[nd[1]].is_terminal:
            continue
        own = set(lat.node_actions(nd[0], nd[1], i))
        for (mt, mn) in h.members:
            if arena.nodes[mn].is_terminal:
                continue
            acts = set(lat.node_actions(mt, mn, i))
            if not acts <= own:
                flag("I4", (nd[0], nd[1], str(i)), f"member {(mt, mn)} has extra actions")
        member_sets = {lat.node_actions(mt, mn, i) for (mt, mn) in h.members if not arena.nodes[mn].is_terminal}
        if len(member_sets) > 1:
            flag("I4", (nd[0], nd[1], str(i)), "members carry unequal action sets")

    # I5 distinct action names in disjoint information sets.
    for tid in lat.trees:
        per: dict[int, list[tuple[str, tuple[str, ...]]]] = {}
        for name in sorted(lat.trees[tid].node_names):
            node = arena.nodes[name]
            if node.is_terminal:
                continue
            for j in node.active:
                if j == NATURE:
                    continue
                per.setdefault(j, []).append((name, lat.node_actions(tid, name, j)))
        for j, entries in sorted(per.items()):
            for (n1, a1), (n2, a2) in itertools.combinations(entries, 2):
                if set(a1) == set(a2):
                    h1, h2 = hset((tid, n1), j), hset((tid, n2), j)
                    if h1 is not None and h2 is not None and h1.members != h2.members:
                        flag("I5", (tid, n1, n2, str(j)), "equal action sets but distinct sets")

    # I6 perfect recall, by path enumeration inside each tree.
    for tid in lat.trees:
        for name in sorted(lat.trees[tid].node_names):
            nk = (tid, name)
            for i in game.active_players(nk):
                if i == NATURE:
                    continue
                hk = hset(nk, i)
                if hk is None or hk.host is None:
                    continue
                path = _root_path(game, nk)
                for n1 in path[:-1]:
                    if i not in game.active_players(n1) or arena.nodes[n1[1]].is_terminal:
                        continue
                    a1 = _edge_action(game, n1, name, i)
                    h1 = hset(n1, i)
                    if a1 is None or h1 is None:
                        continue
                    for m in hk.members:
                        if m == nk:
                            continue
                        mpath = _root_path(game, m)
                        found = False
                        for anc in mpath[:-1]:
                            if i not in game.active_players(anc) or arena.nodes[anc[1]].is_terminal:
                                continue
                            ha = hset(anc, i)
                            if ha is not None and ha.members == h1.members:
                                if _edge_action(game, anc, m[1], i) == a1:
                                    found = True
                                    break
                        if not found:
                            flag(
                                "I6",
                                (tid, name, str(i)),
                                f"member {m} lacks a matching {h1.label} predecessor taking {a1!r}",
                            )

    # I7 terminal information sets: only terminals, equal own payoff.
    for (nd, i), h in sorted(game.infosets.items()):
        if not arena.nodes[nd[1]].is_terminal:
            continue
        for (mt, mn) in h.members:
            if not arena.nodes[mn].is_terminal:
                flag("I7", (nd[0], nd[1], str(i)), f"non-terminal member {(mt, mn)}")
            elif game.payoff_at(mn, i) != game.payoff_at(nd[1], i):
                flag(
                    "I7",
                    (nd[0], nd[1], str(i)),
                    f"member {(mt, mn)} has payoff {game.payoff_at(mn, i)} != {game.payoff_at(nd[1], i)}",
                )

    # U4 subtrees preserve ignorance / U5 subtrees preserve knowledge.
    for (nd, i), h in sorted(game.infosets.items()):
        host = h.host
        if host is None:
            continue
        t2, name = nd
        for t1 in tids:
            if t1 == t2 or not lat.trees[t1].has(name):
                continue
            if lat.leq(host, t1) and lat.leq(t1, t2):
                hh = hset((t1, name), i)
                if hh is not None and hh.members != h.members:
                    flag("U4", (t2, name, str(i)), f"copy in {t1!r} carries a different set")
            if lat.leq(t1, host) and lat.lt(t1, t2):
                hh = hset((t1, name), i)
                expected = tuple(
                    sorted((t1, mn) for (_mt, mn) in h.members if lat.trees[t1].has(mn))
                )
                if hh is not None and tuple(sorted(hh.members)) != expected:
                    flag("U5", (t2, name, str(i)), f"copy in {t1!r} is not the projected set")

    # Lattice join-closure.
    for t1, t2 in itertools.combinations(sorted(lat.trees), 2):
        try:
            lat.join(t1, t2)
        except GameError:
            flag("ARBOR", (t1, t2), "tree family not closed under join")

    bad.sort(key=lambda v: (v.axiom, v.witness))
    return ValidationReport(bad)
