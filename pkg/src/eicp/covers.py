"""Achievable schemes built from side-information structures.

Both schemes need one demand per message (a single unicast instance). Users
are relabeled by the message they demand, so structure witnesses can use one
index sequence for users and messages; senders are mapped back to the actual
user indices when transmissions are assembled.

Costs, with I(s) = 1 when structure s has a covering user:
  path-pattern cover:   a size-n structure costs n - 1 transmissions and a
                        lone message costs 1, so length = N - K + K_e with K
                        structures of which K_e are lone messages;
  mutual-knowledge cover: a clique costs 2 - I(s), lone messages are always
                        coverable, so length = K + K_u with K_u uncovered.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .codes import EmbeddedIndexCode, Transmission, verify_code
from .errors import GuardExceededError, NotSingleUnicastError
from .gf import GfVector
from .graphs import (
    BICLIQUE,
    COVERED_PAIR,
    REGULAR_TREE,
    SINGLE_EDGE,
    SideInfoBipartiteGraph,
    StructureWitness,
    _find_tree_sequence,
    find_covered_pairs,
    search_bicliques,
    single_edge_witness,
    verify_structure,
)
from .model import EicpInstance, classify, require_valid

TREE_SCHEME = "tree"
BICLIQUE_SCHEME = "biclique"
EXACT_COVER_LIMIT = 12


@dataclass(frozen=True)
class CoverPlan:
    """A structure partition plus the code it induces.

    counts carries the cost identity of the scheme and is re-derived and
    asserted at construction, so a plan can never misreport its own length.
    """

    scheme: str
    structures: tuple[StructureWitness, ...]
    code: EmbeddedIndexCode
    counts: dict
    flags: dict

    def __post_init__(self):
        c = self.counts
        assert c["length"] == self.code.length, "counts disagree with the code"
        assert c["structures"] == len(self.structures)
        if self.scheme == TREE_SCHEME:
            lone = sum(1 for w in self.structures if w.kind == SINGLE_EDGE)
            assert c["single_edges"] == lone
            assert c["length"] == c["messages"] - c["structures"] + lone
        elif self.scheme == BICLIQUE_SCHEME:
            uncov = sum(1 for w in self.structures if not w.covered)
            assert c["uncovered"] == uncov
            assert c["length"] == c["structures"] + uncov
        else:
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def to_json_obj(self) -> dict:
        return {
            "scheme": self.scheme,
            "length": self.counts["length"],
            "counts": dict(self.counts),
            "flags": dict(self.flags),
            "structures": [w.to_json_obj() for w in self.structures],
            "transmissions": [
                {"user": t.user, "coeffs": list(t.coeffs.coords)}
                for t in self.code.transmissions
            ],
        }


def demand_relabeling(inst: EicpInstance) -> tuple[SideInfoBipartiteGraph, dict[int, int]]:
    """Graph whose user slot m is the demander of message m, plus slot -> user map."""
    require_valid(inst)
    cls = classify(inst)
    if not cls.single_unicast:
        raise NotSingleUnicastError(
            "cover schemes need exactly one demander per message "
            f"(got {inst.num_users} users, {inst.num_messages} messages, "
            f"{len(set(inst.demands))} distinct demands)"
        )
    demander = {inst.demand(i): i for i in inst.users}
    adjacency = tuple(inst.side_info[demander[m] - 1] for m in inst.messages)
    graph = SideInfoBipartiteGraph(inst.num_users, inst.num_messages, adjacency)
    return graph, demander


def _combination(inst: EicpInstance, messages) -> GfVector:
    coords = [0] * inst.num_messages
    for m in messages:
        coords[m - 1] = 1
    return GfVector(inst.q, tuple(coords))


def _tree_transmissions(inst, demander, w: StructureWitness) -> list[Transmission]:
    # Slot j sends the sum of the next two slots' messages; the last slot
    # only listens. n - 1 symbols, each inside its sender's side info.
    seq = w.msg_seq
    n = len(seq)
    out = []
    for j in range(1, n):
        sender = demander[seq[j - 1]]
        out.append(Transmission(sender, _combination(inst, (seq[j % n], seq[(j + 1) % n]))))
    return out


def _structure_transmissions(inst, demander, w: StructureWitness) -> list[Transmission]:
    if w.kind == REGULAR_TREE:
        return _tree_transmissions(inst, demander, w)
    if w.kind in (SINGLE_EDGE, COVERED_PAIR):
        return [Transmission(demander[w.covering_user], _combination(inst, w.msg_seq))]
    if w.kind == BICLIQUE:
        if w.covered:
            return [Transmission(demander[w.covering_user], _combination(inst, w.msg_seq))]
        first, second = w.msg_seq[0], w.msg_seq[1]
        return [
            Transmission(demander[first], _combination(inst, w.msg_seq[1:])),
            Transmission(demander[second], _combination(inst, (first,))),
        ]
    raise ValueError(f"unknown structure kind {w.kind!r}")


def _usage_bound(w: StructureWitness) -> int:
    """Most transmissions any member combines to decode under the scheme."""
    if w.kind == REGULAR_TREE:
        # The first slot chains backwards until it hits a message it holds.
        return max(1, w.size - 2)
    return 1


def _finish_plan(inst, graph, demander, scheme: str,
                 structures: list[StructureWitness]) -> CoverPlan:
    for w in structures:
        assert verify_structure(graph, w), f"structure {w} does not embed"
    covered_msgs = sorted(m for w in structures for m in w.msg_seq)
    assert covered_msgs == list(inst.messages), "structures must partition the messages"
    transmissions = []
    for w in structures:
        transmissions.extend(_structure_transmissions(inst, demander, w))
    code = EmbeddedIndexCode(inst, tuple(transmissions))
    report = verify_code(code, inst)
    assert report.overall, "cover scheme produced an unusable code"
    counts = {
        "messages": inst.num_messages,
        "structures": len(structures),
        "length": code.length,
    }
    if scheme == TREE_SCHEME:
        counts["single_edges"] = sum(1 for w in structures if w.kind == SINGLE_EDGE)
    else:
        counts["uncovered"] = sum(1 for w in structures if not w.covered)
    flags = {
        "task_based": all(_usage_bound(w) <= 2 for w in structures),
        "all_covered": all(w.covered for w in structures),
    }
    return CoverPlan(scheme, tuple(structures), code, counts, flags)


def _take_disjoint_pairs(pairs: list[StructureWitness], pool: set[int]
                         ) -> list[StructureWitness]:
    taken = []
    for w in pairs:
        if set(w.msg_seq) <= pool:
            taken.append(w)
            pool -= set(w.msg_seq)
    return taken


def tree_cover(inst: EicpInstance, exact: bool = False) -> CoverPlan:
    """Partition the messages into path patterns, covered pairs, and lone messages.

    The default greedy pass takes covered pairs first (they deliver two
    messages per transmission), then path patterns of ascending size, then
    lone messages. exact=True searches every partition and minimizes the
    transmission count outright.
    """
    graph, demander = demand_relabeling(inst)
    if exact:
        structures = _exact_cover(inst, graph, TREE_SCHEME)
    else:
        pool = set(inst.messages)
        structures = _take_disjoint_pairs(find_covered_pairs(graph, sorted(pool)), pool)
        while True:
            remaining = sorted(pool)
            seq = None
            for n in range(3, len(remaining) + 1):
                seq = _find_tree_sequence(graph, remaining, n)
                if seq is not None:
                    break
            if seq is None:
                break
            structures.append(StructureWitness(REGULAR_TREE, seq, seq))
            pool -= set(seq)
        for m in sorted(pool):
            w = single_edge_witness(graph, m)
            assert w is not None, f"message {m} has no outside holder"
            structures.append(w)
    return _finish_plan(inst, graph, demander, TREE_SCHEME, structures)


def biclique_cover(inst: EicpInstance, exact: bool = False) -> CoverPlan:
    """Partition the messages into mutual-knowledge cliques and lone messages.

    Greedy takes the largest clique available each round; covered structures
    cost one transmission, uncovered ones two. exact=True minimizes the total
    cost over all partitions.
    """
    graph, demander = demand_relabeling(inst)
    if exact:
        structures = _exact_cover(inst, graph, BICLIQUE_SCHEME)
    else:
        structures = search_bicliques(graph, list(inst.messages))
        order = {m: idx for idx, w in enumerate(structures) for m in w.msg_seq}
        assert len(order) == inst.num_messages, "clique packing missed a message"
    return _finish_plan(inst, graph, demander, BICLIQUE_SCHEME, structures)


# ---------- exact partition search ----------

def _pair_cover_user(graph: SideInfoBipartiteGraph, a: int, b: int) -> int | None:
    if b not in graph.knows[a - 1] or a not in graph.knows[b - 1]:
        return None
    return next(
        (c for c in range(1, graph.num_users + 1)
         if c not in (a, b) and {a, b} <= graph.knows[c - 1]),
        None,
    )


def _clique_info(graph: SideInfoBipartiteGraph, members: tuple[int, ...]):
    """(is_clique, covering_user_or_None) for a candidate member set."""
    for a, b in itertools.combinations(members, 2):
        if b not in graph.knows[a - 1] or a not in graph.knows[b - 1]:
            return False, None
    member_set = set(members)
    cov = next(
        (c for c in range(1, graph.num_users + 1)
         if c not in member_set and member_set <= graph.knows[c - 1]),
        None,
    )
    return True, cov


def _exact_cover(inst, graph, scheme: str) -> list[StructureWitness]:
    """Minimum-cost partition by dynamic programming over message subsets.

    States are bitmasks of still-uncovered messages; the block containing the
    lowest uncovered message is enumerated directly, so each partition is
    visited once. Ties break on (length, extra-cost structures, block list),
    which pins the answer down deterministically.
    """
    n = inst.num_messages
    if n > EXACT_COVER_LIMIT:
        raise GuardExceededError(
            f"exact cover search supports at most {EXACT_COVER_LIMIT} messages"
        )
    messages = list(inst.messages)
    full = (1 << n) - 1

    def members_of(mask: int) -> tuple[int, ...]:
        return tuple(messages[b] for b in range(n) if mask >> b & 1)

    tree_seq_cache: dict[int, tuple[int, ...] | None] = {}

    def tree_seq(mask: int):
        if mask not in tree_seq_cache:
            pool = sorted(members_of(mask))
            tree_seq_cache[mask] = _find_tree_sequence(graph, pool, len(pool))
        return tree_seq_cache[mask]

    def block_options(mask: int, low_bit: int):
        """(cost, extra, block_mask, witness) choices for the block holding low_bit."""
        m = messages[low_bit]
        out = []
        w = single_edge_witness(graph, m)
        if w is not None:
            extra = 1 if scheme == TREE_SCHEME else 0
            out.append((1, extra, 1 << low_bit, w))
        rest_mask = mask & ~(1 << low_bit)
        sub = rest_mask
        while sub:
            block = sub | (1 << low_bit)
            sub = (sub - 1) & rest_mask
            members = members_of(block)
            size = len(members)
            if scheme == TREE_SCHEME:
                if size == 2:
                    cov = _pair_cover_user(graph, *members)
                    if cov is not None:
                        out.append((1, 0, block,
                                    StructureWitness(COVERED_PAIR, members, members, cov, True)))
                else:
                    seq = tree_seq(block)
                    if seq is not None:
                        out.append((size - 1, 0, block,
                                    StructureWitness(REGULAR_TREE, seq, seq)))
            else:
                is_clique, cov = _clique_info(graph, members)
                if is_clique:
                    kind = COVERED_PAIR if size == 2 and cov is not None else BICLIQUE
                    cost = 1 if cov is not None else 2
                    out.append((cost, 0 if cov is not None else 1, block,
                                StructureWitness(kind, members, members, cov, cov is not None)))
        return out

    best: dict[int, tuple[int, int, tuple]] = {0: (0, 0, ())}

    def solve(mask: int) -> tuple[int, int, tuple]:
        if mask in best:
            return best[mask]
        low_bit = (mask & -mask).bit_length() - 1
        answer = None
        for cost, extra, block, witness in block_options(mask, low_bit):
            rest = solve(mask & ~block)
            key = tuple(sorted(witness.msg_seq))
            cand = (cost + rest[0], extra + rest[1],
                    tuple(sorted(rest[2] + ((key, witness),))))
            if answer is None or cand < answer:
                answer = cand
        assert answer is not None, "a lone message was not coverable"
        best[mask] = answer
        return answer

    _, _, blocks = solve(full)
    return [w for _key, w in blocks]


def compare_schemes(inst: EicpInstance, node_limit: int | None = None,
                    exact: bool = False) -> dict:
    """Lengths of both cover schemes next to the exact optimum.

    Both covers are working codes, so the optimum can never exceed either
    length; that is asserted, not assumed.
    """
    from .minrank import minrank_bnb

    tree = tree_cover(inst, exact=exact)
    biclique = biclique_cover(inst, exact=exact)
    result = minrank_bnb(inst, node_limit=node_limit)
    assert result.kappa <= tree.counts["length"], "optimum exceeds the tree cover"
    assert result.kappa <= biclique.counts["length"], "optimum exceeds the clique cover"
    return {
        "tree_length": tree.counts["length"],
        "biclique_length": biclique.counts["length"],
        "kappa": result.kappa,
    }
