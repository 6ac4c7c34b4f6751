"""Bipartite views of an instance and the structure machinery built on them.

Two graphs matter. The side-information graph joins user i to every message
it holds; it is undirected and drives connectivity arguments and the cover
schemes. The problem graph adds direction: side-info edges point user ->
message, and each demanded message points at its demander.

Structure search and verification use the standard relabeling for instances
where every message is demanded by exactly one user: user i is the demander
of message i. Under that convention a structure's member users are exactly
the demanders of its member messages, while covering users and transmitters
may be any other user, including pure helpers with indices above the message
count.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from .errors import GuardExceededError
from .model import EicpInstance

CANONICAL_SIZE_LIMIT = 8

SINGLE_EDGE = "single_edge"
COVERED_PAIR = "covered_pair"
REGULAR_TREE = "regular_tree"
BICLIQUE = "biclique"


@dataclass(frozen=True)
class SideInfoBipartiteGraph:
    """Undirected bipartite graph: user i -- message m for every m in adjacency[i-1]."""

    num_users: int
    num_messages: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.adjacency) != self.num_users:
            raise ValueError("adjacency must have one entry per user")
        object.__setattr__(
            self, "adjacency", tuple(tuple(sorted(set(k))) for k in self.adjacency)
        )
        for k in self.adjacency:
            if k and not (1 <= k[0] and k[-1] <= self.num_messages):
                raise ValueError("message index out of range in adjacency")

    @cached_property
    def knows(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(k) for k in self.adjacency)

    def user_knows(self, user: int) -> frozenset[int]:
        return self.knows[user - 1]

    def message_degree(self, message: int) -> int:
        return sum(1 for k in self.knows if message in k)

    def message_holders(self, message: int) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.num_users + 1) if message in self.knows[i - 1])


@dataclass(frozen=True)
class BipartiteProblemGraph:
    """Directed view: user -> held message, demanded message -> demanding user."""

    num_users: int
    num_messages: int
    side_adjacency: tuple[tuple[int, ...], ...]
    demands: tuple[int, ...]

    def user_out(self, user: int) -> tuple[int, ...]:
        return self.side_adjacency[user - 1]

    def user_in(self, user: int) -> tuple[int, ...]:
        return (self.demands[user - 1],)

    def message_out(self, message: int) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.num_users + 1) if self.demands[i - 1] == message)

    def message_in(self, message: int) -> tuple[int, ...]:
        return tuple(
            i for i in range(1, self.num_users + 1) if message in self.side_adjacency[i - 1]
        )


@dataclass(frozen=True)
class PrunedGraph:
    """Side-info graph restricted to messages of degree >= 2 (all users kept)."""

    base: SideInfoBipartiteGraph
    x_prime: tuple[int, ...]
    adjacency: tuple[tuple[int, ...], ...]


def build_side_info_graph(inst: EicpInstance) -> SideInfoBipartiteGraph:
    return SideInfoBipartiteGraph(inst.num_users, inst.num_messages, inst.side_info)


def build_problem_graph(inst: EicpInstance) -> BipartiteProblemGraph:
    return BipartiteProblemGraph(
        inst.num_users, inst.num_messages, inst.side_info, inst.demands
    )


def _connected(num_users: int, messages, adjacency) -> bool:
    messages = list(messages)
    total = num_users + len(messages)
    if total == 0:
        return False
    holders: dict[int, list[int]] = {m: [] for m in messages}
    for i in range(num_users):
        for m in adjacency[i]:
            if m in holders:
                holders[m].append(i + 1)
    msg_set = set(messages)
    seen_u: set[int] = set()
    seen_m: set[int] = set()
    stack: list[tuple[str, int]] = [("u", 1)] if num_users else [("m", messages[0])]
    while stack:
        kind, v = stack.pop()
        if kind == "u":
            if v in seen_u:
                continue
            seen_u.add(v)
            for m in adjacency[v - 1]:
                if m in msg_set and m not in seen_m:
                    stack.append(("m", m))
        else:
            if v in seen_m:
                continue
            seen_m.add(v)
            for u in holders[v]:
                if u not in seen_u:
                    stack.append(("u", u))
    return len(seen_u) + len(seen_m) == total


def is_connected(g: SideInfoBipartiteGraph | PrunedGraph) -> bool:
    """Connectivity over ALL vertices (isolated users or messages disconnect)."""
    if isinstance(g, PrunedGraph):
        return _connected(g.base.num_users, g.x_prime, g.adjacency)
    return _connected(g.num_users, range(1, g.num_messages + 1), g.adjacency)


def prune_degree_one(g: SideInfoBipartiteGraph) -> PrunedGraph:
    """Drop degree <= 1 messages. Message degrees never change, so one pass suffices."""
    x_prime = tuple(
        m for m in range(1, g.num_messages + 1) if g.message_degree(m) >= 2
    )
    keep = set(x_prime)
    adjacency = tuple(tuple(m for m in k if m in keep) for k in g.adjacency)
    pruned = PrunedGraph(g, x_prime, adjacency)
    assert all(
        g.message_degree(m) >= 2 for m in x_prime
    ), "pruned graph kept a low-degree message"
    return pruned


def uniq_demanded(demands, message_subset=None) -> int:
    """Number of distinct demanded messages, optionally restricted to a subset."""
    wanted = set(demands)
    if message_subset is not None:
        wanted &= set(message_subset)
    return len(wanted)


@dataclass(frozen=True)
class StructureWitness:
    """An embedded structure. user_seq[j] demands msg_seq[j] under the labeling convention."""

    kind: str
    user_seq: tuple[int, ...]
    msg_seq: tuple[int, ...]
    covering_user: int | None = None
    covered: bool = False

    @property
    def size(self) -> int:
        return len(self.msg_seq)

    def to_json_obj(self) -> dict:
        obj = {
            "kind": self.kind,
            "users": list(self.user_seq),
            "messages": list(self.msg_seq),
            "covered": self.covered,
        }
        if self.covering_user is not None:
            obj["covering_user"] = self.covering_user
        return obj


def _tree_edge_constraints(n: int):
    """Required (slot, message-slot) adjacencies of the size-n path pattern.

    Slot j (1-based) must be adjacent to message slots j+1 (j <= n-1), j+2
    (j <= n-2), and slot n-1 and slot n are both adjacent to message slot 1.
    """
    wants: list[list[int]] = [[] for _ in range(n)]
    for j in range(1, n):
        wants[j - 1].append(j + 1)
    for j in range(1, n - 1):
        wants[j - 1].append(j + 2)
    wants[n - 2].append(1)
    wants[n - 1].append(1)
    return wants


def tree_witness_edges(w: StructureWitness) -> set[tuple[int, int]]:
    """The 2n-1 (user, message) edges a regular-tree witness asserts."""
    n = w.size
    seq = w.msg_seq
    edges = set()
    for j in range(1, n + 1):
        edges.add((seq[j - 1], seq[j % n]))
    for j in range(1, n):
        edges.add((seq[j - 1], seq[(j + 1) % n]))
    return edges


def verify_structure(g: SideInfoBipartiteGraph, w: StructureWitness) -> bool:
    """True iff every edge the witness asserts exists in g and the shape is well formed."""
    n = len(w.msg_seq)
    if len(w.user_seq) != n or len(set(w.msg_seq)) != n:
        return False
    if tuple(w.user_seq) != tuple(w.msg_seq):
        return False  # members must demand their own slot's message
    if any(not 1 <= m <= g.num_messages for m in w.msg_seq):
        return False
    if any(not 1 <= u <= g.num_users for u in w.user_seq):
        return False
    cov = w.covering_user
    if cov is not None and (cov in w.user_seq or not 1 <= cov <= g.num_users):
        return False

    if w.kind == SINGLE_EDGE:
        return n == 1 and cov is not None and w.msg_seq[0] in g.knows[cov - 1]
    if w.kind == COVERED_PAIR:
        if n != 2 or cov is None:
            return False
        a, b = w.msg_seq
        return (
            b in g.knows[a - 1]
            and a in g.knows[b - 1]
            and {a, b} <= g.knows[cov - 1]
        )
    if w.kind == REGULAR_TREE:
        if n < 3:
            return False
        for (u, m) in tree_witness_edges(w):
            if m not in g.knows[u - 1]:
                return False
        return True
    if w.kind == BICLIQUE:
        if n < 2:
            return False
        for u, m in itertools.permutations(w.msg_seq, 2):
            if m not in g.knows[u - 1]:
                return False
        if w.covered:
            return cov is not None and set(w.msg_seq) <= g.knows[cov - 1]
        return True
    return False


def _find_tree_sequence(g: SideInfoBipartiteGraph, pool: list[int], n: int):
    """Lexicographically first index sequence forming the size-n pattern, or None."""
    wants = _tree_edge_constraints(n)

    def ok(seq: list[int], slot: int) -> bool:
        # Check every constraint that became fully instantiated by filling `slot`.
        for j in range(slot + 1):
            known = g.knows[seq[j] - 1]
            for t in wants[j]:
                if t - 1 <= slot and seq[t - 1] not in known:
                    return False
        return True

    seq: list[int] = []
    used: set[int] = set()

    def extend(slot: int):
        for m in pool:
            if m in used:
                continue
            seq.append(m)
            used.add(m)
            if ok(seq, slot):
                if slot == n - 1:
                    return True
                if extend(slot + 1):
                    return True
            seq.pop()
            used.discard(m)
        return False

    return tuple(seq) if extend(0) else None


def search_regular_trees(g: SideInfoBipartiteGraph, msg_pool, n_max: int | None = None
                         ) -> list[StructureWitness]:
    """Greedy message-disjoint packing of regular-tree witnesses, largest first."""
    limit = min(g.num_users, g.num_messages)
    remaining = sorted(m for m in set(msg_pool) if m <= limit)
    if n_max is None:
        n_max = len(remaining)
    found: list[StructureWitness] = []
    n = min(n_max, len(remaining))
    while n >= 3:
        seq = _find_tree_sequence(g, remaining, n)
        if seq is None:
            n -= 1
            continue
        found.append(StructureWitness(REGULAR_TREE, seq, seq))
        remaining = [m for m in remaining if m not in set(seq)]
        n = min(n, len(remaining))
    return found


def find_covered_pairs(g: SideInfoBipartiteGraph, msg_pool) -> list[StructureWitness]:
    """Every covered pair available inside msg_pool, lexicographic, smallest cover user."""
    limit = min(g.num_users, g.num_messages)
    pool = sorted(m for m in set(msg_pool) if m <= limit)
    out = []
    for a, b in itertools.combinations(pool, 2):
        if b not in g.knows[a - 1] or a not in g.knows[b - 1]:
            continue
        cov = next(
            (c for c in range(1, g.num_users + 1)
             if c not in (a, b) and {a, b} <= g.knows[c - 1]),
            None,
        )
        if cov is not None:
            out.append(StructureWitness(COVERED_PAIR, (a, b), (a, b), cov, True))
    return out


def single_edge_witness(g: SideInfoBipartiteGraph, message: int) -> StructureWitness | None:
    """Lone message delivered plainly by its smallest non-demanding holder."""
    cov = next(
        (c for c in range(1, g.num_users + 1)
         if c != message and message in g.knows[c - 1]),
        None,
    )
    if cov is None:
        return None
    return StructureWitness(SINGLE_EDGE, (message,), (message,), cov, True)


def _mutual_knowledge_edges(g: SideInfoBipartiteGraph, pool: list[int]) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = {m: set() for m in pool}
    for a, b in itertools.combinations(pool, 2):
        if b in g.knows[a - 1] and a in g.knows[b - 1]:
            adj[a].add(b)
            adj[b].add(a)
    return adj


def _max_clique(vertices: list[int], adj: dict[int, set[int]]) -> list[int]:
    """Exact maximum clique, lexicographically smallest among the largest."""
    best: list[int] = []

    def grow(clique: list[int], candidates: list[int]):
        nonlocal best
        if len(clique) + len(candidates) <= len(best):
            return
        if not candidates:
            if len(clique) > len(best):
                best = list(clique)
            return
        for idx, v in enumerate(candidates):
            if len(clique) + len(candidates) - idx <= len(best):
                break
            grow(clique + [v], [w for w in candidates[idx + 1:] if w in adj[v]])

    grow([], vertices)
    return best


def _covering_user(g: SideInfoBipartiteGraph, members) -> int | None:
    member_set = set(members)
    return next(
        (c for c in range(1, g.num_users + 1)
         if c not in member_set and member_set <= g.knows[c - 1]),
        None,
    )


def search_bicliques(g: SideInfoBipartiteGraph, msg_pool, n_max: int | None = None
                     ) -> list[StructureWitness]:
    """Greedy packing of the pool by mutual-knowledge cliques, largest first.

    Leftover messages come out as single edges; a message no other user holds
    is silently skipped (cannot happen on valid instances).
    """
    limit = min(g.num_users, g.num_messages)
    remaining = sorted(m for m in set(msg_pool) if m <= limit)
    if n_max is None:
        n_max = len(remaining)
    found: list[StructureWitness] = []
    while True:
        adj = _mutual_knowledge_edges(g, remaining)
        clique = _max_clique(remaining, adj)
        if len(clique) < 2:
            break
        if len(clique) > n_max:
            clique = clique[:n_max]
        members = tuple(sorted(clique))
        cov = _covering_user(g, members)
        if len(members) == 2 and cov is not None:
            kind = COVERED_PAIR
        else:
            kind = BICLIQUE
        found.append(StructureWitness(kind, members, members, cov, cov is not None))
        remaining = [m for m in remaining if m not in set(members)]
    for m in remaining:
        w = single_edge_witness(g, m)
        if w is not None:
            found.append(w)
    return found


def canonical_form(g: SideInfoBipartiteGraph, max_size: int = CANONICAL_SIZE_LIMIT) -> bytes:
    """Isomorphism-class key under independent user and message relabelings.

    For each user ordering, a message becomes the bitmask of its holders and
    the multiset of masks is sorted, which fully absorbs the message
    permutation; minimizing over user orderings makes the key exact.
    """
    if g.num_users > max_size or g.num_messages > max_size:
        raise GuardExceededError(
            f"canonical_form supports at most {max_size} users and messages"
        )
    best: tuple[int, ...] | None = None
    users = range(g.num_users)
    for perm in itertools.permutations(users):
        cols = sorted(
            sum(1 << p for p, orig in enumerate(perm) if m in g.knows[orig])
            for m in range(1, g.num_messages + 1)
        )
        key = tuple(cols)
        if best is None or key < best:
            best = key
    assert best is not None
    return bytes([g.num_users, g.num_messages, *best])
