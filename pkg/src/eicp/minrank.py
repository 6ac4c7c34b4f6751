"""Exact optimal scalar linear code length via two independent routes.

Route one (minrank_bnb) works in two stages. The first minimizes the rank of
a stacked matrix with one row per user, where row i is the demand's unit
vector plus a combination of user i's side-info messages, restricted to rows
some other user could actually transmit. Any maximal independent subset of
such rows is itself a working code, so this rank is always an achievable
length, but it can overshoot: the shortest codes sometimes consist of columns
that are not decodable rows for any single user (a user may need to sum
several transmissions, as in the chain schemes of the covering module). The
second stage closes that gap with a branch-and-bound over transmittable
column subsets, pruned by the stage-one bound, and keeps whichever answer is
smaller.

Route two (minrank_oracle) exhaustively searches codes of increasing length
with no pruning at all and reports the first feasible length. The two routes
must agree; the workbench treats disagreement as a defect, never as data.

Both routes accept an optional `users` subset and then answer for the
sub-problem in which only those users must decode while every user of the
instance may still transmit.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .codes import (
    EmbeddedIndexCode,
    Transmission,
    decodable_from,
    decode_coeffs,
    message_support,
    support_violations,
    unit_vector,
    verify_code,
)
from .errors import GuardExceededError, InvalidCodeError, OracleExhaustedError
from .gf import EchelonBasis, GfMatrix, GfVector, basis_insert, in_span
from .graphs import BipartiteProblemGraph
from .model import EicpInstance, require_valid

CANDIDATES_PER_USER_LIMIT = 2 ** 20
DEFAULT_NODE_LIMIT = 10 ** 6
DEFAULT_ORACLE_BUDGET = 10 ** 7
NODE_LIMIT_ENV = "EICP_GUARD_NODES"


@dataclass(frozen=True)
class CandidateSet:
    """All rows user `user` may contribute, ordered by (support size, coords)."""

    user: int
    vectors: tuple[GfVector, ...]


@dataclass(frozen=True)
class MinrankResult:
    """Answer plus artifacts. `witness` rows follow `users` in ascending order.

    The branch-and-bound route fills both `witness` and `code`; each witness
    row is a combination its user can decode (the demand's unit vector plus a
    side-info combination) lying in the span of the code's columns. The
    exhaustive-search route fills only `code` (it never forms per-user rows).
    """

    kappa: int
    users: tuple[int, ...]
    witness: GfMatrix | None
    code: EmbeddedIndexCode | None
    stats: dict = field(default_factory=dict)


def _resolve_users(inst: EicpInstance, users) -> tuple[int, ...]:
    if users is None:
        return tuple(inst.users)
    users = tuple(sorted(set(users)))
    if not users:
        raise ValueError("users subset must be non-empty")
    for u in users:
        if u not in inst.users:
            raise ValueError(f"user {u} is not a user of the instance")
    return users


def build_candidates(inst: EicpInstance, users=None) -> list[CandidateSet]:
    """Candidate rows per user: demand unit plus side-info combination, transmittable.

    A row is transmittable when its support sits inside some other user's
    side information. The zero combination always survives (someone else
    holds the demand on a valid instance), so no candidate set is empty.
    """
    users = _resolve_users(inst, users)
    q = inst.q
    m = inst.num_messages
    out = []
    for i in users:
        side = sorted(inst.knows(i))
        total = q ** len(side)
        if total > CANDIDATES_PER_USER_LIMIT:
            raise GuardExceededError(
                f"user {i} has {total} side-info combinations "
                f"(limit {CANDIDATES_PER_USER_LIMIT})"
            )
        d = inst.demand(i)
        base = unit_vector(q, m, d)
        vectors = []
        for combo in itertools.product(range(q), repeat=len(side)):
            coords = list(base.coords)
            for c, k in zip(combo, side):
                coords[k - 1] = (coords[k - 1] + c) % q
            vec = GfVector(q, tuple(coords))
            supp = message_support(vec)
            if any(j != i and supp <= inst.knows(j) for j in inst.users):
                vectors.append(vec)
        vectors.sort(key=lambda v: (len(message_support(v)), v.coords))
        out.append(CandidateSet(i, tuple(vectors)))
    return out


def _node_limit(node_limit: int | None) -> int:
    if node_limit is not None:
        return node_limit
    env = os.environ.get(NODE_LIMIT_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise GuardExceededError(f"{NODE_LIMIT_ENV} must be an integer, got {env!r}")
    return DEFAULT_NODE_LIMIT


def _search_order(candidate_sets: list[CandidateSet]) -> list[CandidateSet]:
    """Fewest candidates first; users with identical candidate tuples adjacent.

    Within a run of identical candidate sets the search may force choices to
    be nondecreasing: swapping two such users' rows permutes the stacked
    matrix, which never changes its rank.
    """
    first_seen: dict[tuple, int] = {}
    for pos, cs in enumerate(candidate_sets):
        key = tuple(v.coords for v in cs.vectors)
        first_seen.setdefault(key, pos)
    return sorted(
        candidate_sets,
        key=lambda cs: (
            len(cs.vectors),
            first_seen[tuple(v.coords for v in cs.vectors)],
            cs.user,
        ),
    )


def _same_group(a: CandidateSet, b: CandidateSet) -> bool:
    return tuple(v.coords for v in a.vectors) == tuple(v.coords for v in b.vectors)


class _Budget:
    __slots__ = ("used", "limit", "label")

    def __init__(self, limit: int, label: str = "rank search"):
        self.used = 0
        self.limit = limit
        self.label = label

    def spend(self) -> None:
        self.used += 1
        if self.used > self.limit:
            raise GuardExceededError(
                f"{self.label} visited more than {self.limit} nodes; "
                f"raise {NODE_LIMIT_ENV} to keep going"
            )


def _branch(order: list[CandidateSet], depth: int, basis: EchelonBasis,
            prev_choice: int, incumbent: int, budget: _Budget) -> int:
    """Best achievable rank strictly below `incumbent` in this subtree, else incumbent."""
    if basis.rank >= incumbent:
        return incumbent
    if depth == len(order):
        return basis.rank
    cs = order[depth]
    start = prev_choice if depth > 0 and _same_group(cs, order[depth - 1]) else 0
    for idx in range(start, len(cs.vectors)):
        budget.spend()
        new_basis, _ = basis_insert(basis, cs.vectors[idx])
        incumbent = _branch(order, depth + 1, new_basis, idx, incumbent, budget)
        if incumbent == 1:
            break
    return incumbent


def _first_leaf(order: list[CandidateSet], kappa: int) -> dict[int, GfVector]:
    """Deterministic witness: first assignment (in search order) of rank kappa."""
    choice: dict[int, GfVector] = {}

    def walk(depth: int, basis: EchelonBasis, prev_choice: int) -> bool:
        if basis.rank > kappa:
            return False
        if depth == len(order):
            return basis.rank == kappa
        cs = order[depth]
        start = prev_choice if depth > 0 and _same_group(cs, order[depth - 1]) else 0
        for idx in range(start, len(cs.vectors)):
            new_basis, _ = basis_insert(basis, cs.vectors[idx])
            if walk(depth + 1, new_basis, idx):
                choice[cs.user] = cs.vectors[idx]
                return True
        return False

    q = order[0].vectors[0].q
    dim = len(order[0].vectors[0])
    found = walk(0, EchelonBasis.empty(q, dim), 0)
    assert found, "no assignment reaches the computed optimum"
    return choice


def extract_code(inst: EicpInstance, witness: GfMatrix, users) -> EmbeddedIndexCode:
    """Turn a stacked witness into transmissions: first-seen independent rows.

    The transmitter of a row is the smallest user, other than the row's
    owner, whose side information contains the row's support. Every covered
    user can decode from the result; this is asserted before returning.
    """
    users = _resolve_users(inst, users)
    if witness.num_rows != len(users):
        raise InvalidCodeError("witness has one row per covered user")
    basis = EchelonBasis.empty(inst.q, inst.num_messages)
    transmissions = []
    for owner, row in zip(users, witness.row_vectors()):
        basis, grew = basis_insert(basis, row)
        if not grew:
            continue
        supp = message_support(row)
        sender = next(
            (j for j in inst.users if j != owner and supp <= inst.knows(j)), None
        )
        if sender is None:
            raise InvalidCodeError(
                f"row for user {owner} has support {sorted(supp)} "
                "no other user can transmit"
            )
        transmissions.append(Transmission(sender, row))
    code = EmbeddedIndexCode(inst, tuple(transmissions))
    columns = [t.coeffs for t in code.transmissions]
    assert all(decodable_from(inst, columns, i) for i in users), \
        "extracted code fails a covered user"
    return code


def _side_unit_bases(inst: EicpInstance, users) -> dict[int, EchelonBasis]:
    """Per-user echelon basis of the side-info unit vectors."""
    out: dict[int, EchelonBasis] = {}
    for i in users:
        basis = EchelonBasis.empty(inst.q, inst.num_messages)
        for k in sorted(inst.knows(i)):
            basis, _ = basis_insert(basis, unit_vector(inst.q, inst.num_messages, k))
        out[i] = basis
    return out


def _column_search(inst: EicpInstance, users, pool, incumbent: int,
                   budget: _Budget):
    """Smallest serving column subset strictly below `incumbent`, or None.

    Depth-first over the scalar-normalized transmittable columns in pool
    order, extending only with columns independent of those already chosen
    (a dependent column never enlarges any user's decoding span, so minimal
    serving subsets are independent). `pending` carries, for each user still
    unserved, the basis of its side-info units plus the chosen columns; a
    user is dropped the moment its demand unit enters that span.
    """
    demand_units = {
        i: unit_vector(inst.q, inst.num_messages, inst.demand(i)) for i in users
    }
    start_pending = {
        i: basis
        for i, basis in _side_unit_bases(inst, users).items()
        if not in_span(basis, demand_units[i])
    }
    best: tuple | None = None
    best_size = incumbent

    def walk(pos: int, chosen: list, chosen_basis: EchelonBasis, pending) -> None:
        nonlocal best, best_size
        if not pending:
            best = tuple(chosen)
            best_size = len(chosen)
            return
        if len(chosen) + 1 >= best_size:
            return
        for idx in range(pos, len(pool)):
            vec, _sender = pool[idx]
            budget.spend()
            new_basis, grew = basis_insert(chosen_basis, vec)
            if not grew:
                continue
            new_pending = {}
            for i, basis in pending.items():
                nb, _ = basis_insert(basis, vec)
                if not in_span(nb, demand_units[i]):
                    new_pending[i] = nb
            chosen.append(pool[idx])
            walk(idx + 1, chosen, new_basis, new_pending)
            chosen.pop()

    walk(0, [], EchelonBasis.empty(inst.q, inst.num_messages), start_pending)
    return best


def _decode_row(code: EmbeddedIndexCode, inst: EicpInstance, user: int) -> GfVector:
    """The combination of code columns user `user` decodes its demand from.

    Equals the demand's unit vector plus a side-info combination, by the
    decoding identity.
    """
    _combo, correction = decode_coeffs(code, inst, user)
    coords = list(unit_vector(inst.q, inst.num_messages, inst.demand(user)).coords)
    for c, k in zip(correction.coords, sorted(inst.knows(user))):
        coords[k - 1] = (coords[k - 1] + c) % inst.q
    return GfVector(inst.q, tuple(coords))


def minrank_bnb(inst: EicpInstance, users=None, node_limit: int | None = None,
                parallel: bool = False) -> MinrankResult:
    """Exact optimal code length by two-stage branch and bound.

    Stage one minimizes the stacked-matrix rank. The uncoded scheme seeds the
    incumbent at the number of distinct demands, users enter the search with
    the smallest candidate sets first, and a subtree is cut as soon as its
    partial stack already reaches the incumbent. With parallel=True the
    first-level branches of this stage run on worker threads, each against a
    private incumbent, so the result stays deterministic.

    Stage two searches transmittable column subsets strictly smaller than the
    stage-one rank; it usually finds nothing, but on chain-like instances the
    shortest code's columns are not decodable rows for any single user and
    only this stage sees them.

    The returned artifacts are deterministic. When stage one stands, a second
    pass picks the first row assignment in search order that attains the
    optimum and reads the code off its independent rows; when stage two
    improves it, the winning columns become the code and each witness row is
    recomputed from its user's decoding recipe.
    """
    require_valid(inst)
    users = _resolve_users(inst, users)
    limit = _node_limit(node_limit)
    candidate_sets = build_candidates(inst, users)
    order = _search_order(candidate_sets)

    start_incumbent = len({inst.demand(i) for i in users})
    product = 1
    for cs in candidate_sets:
        product *= len(cs.vectors)

    q = inst.q
    dim = inst.num_messages
    empty = EchelonBasis.empty(q, dim)
    if parallel and len(order) > 1:
        first = order[0]
        budgets = [_Budget(limit) for _ in first.vectors]

        def run(idx: int) -> int:
            budgets[idx].spend()
            basis, _ = basis_insert(empty, first.vectors[idx])
            return _branch(order, 1, basis, idx, start_incumbent, budgets[idx])

        with ThreadPoolExecutor() as pool:
            results = list(pool.map(run, range(len(first.vectors))))
        row_rank = min([start_incumbent, *results])
        nodes = sum(b.used for b in budgets)
    else:
        budget = _Budget(limit)
        row_rank = _branch(order, 0, empty, 0, start_incumbent, budget)
        nodes = budget.used

    column_budget = _Budget(limit, "code search")
    improvement = None
    pool_size = 0
    if row_rank > 1:
        pool = _transmission_pool(inst)
        pool_size = len(pool)
        improvement = _column_search(inst, users, pool, row_rank, column_budget)

    if improvement is None:
        kappa = row_rank
        choice = _first_leaf(order, kappa)
        witness = GfMatrix.from_rows(q, [choice[i].coords for i in users], num_cols=dim)
        code = extract_code(inst, witness, users)
    else:
        kappa = len(improvement)
        code = EmbeddedIndexCode(
            inst, tuple(Transmission(sender, vec) for vec, sender in improvement)
        )
        _recheck_through_code_path(inst, users, code)
        rows = [_decode_row(code, inst, i).coords for i in users]
        witness = GfMatrix.from_rows(q, rows, num_cols=dim)
    assert code.length == kappa, "extracted code length differs from the optimum"
    stats = {
        "nodes_explored": nodes,
        "candidates_total": sum(len(cs.vectors) for cs in candidate_sets),
        "candidates_per_user": {cs.user: len(cs.vectors) for cs in candidate_sets},
        "product_size": product,
        "incumbent_initial": start_incumbent,
        "row_rank_bound": row_rank,
        "column_nodes_explored": column_budget.used,
        "column_pool_size": pool_size,
    }
    return MinrankResult(kappa, users, witness, code, stats)


def _scalar_normalize(coords: tuple[int, ...], q: int) -> tuple[int, ...]:
    from .gf import field_inv

    lead = next(c for c in coords if c)
    inv = field_inv(lead, q)
    return tuple((inv * c) % q for c in coords)


def _transmission_pool(inst: EicpInstance) -> list[tuple[GfVector, int]]:
    """Every transmittable column up to scalar, with its smallest sender.

    Scaling a column never changes what any user can decode, so one
    representative per direction (leading coefficient 1) is exhaustive.
    """
    q = inst.q
    m = inst.num_messages
    seen: dict[tuple[int, ...], int] = {}
    for j in inst.users:
        side = sorted(inst.knows(j))
        total = q ** len(side)
        if total > CANDIDATES_PER_USER_LIMIT:
            raise GuardExceededError(
                f"user {j} has {total} transmittable combinations "
                f"(limit {CANDIDATES_PER_USER_LIMIT})"
            )
        for combo in itertools.product(range(q), repeat=len(side)):
            if not any(combo):
                continue
            coords = [0] * m
            for c, k in zip(combo, side):
                coords[k - 1] = c
            key = _scalar_normalize(tuple(coords), q)
            if key not in seen or j < seen[key]:
                seen[key] = j
        # On a valid instance every user misses a message, so total stays sane.
    pool = [(GfVector(q, coords), sender) for coords, sender in seen.items()]
    pool.sort(key=lambda p: (len(message_support(p[0])), p[0].coords))
    return pool


def minrank_oracle(inst: EicpInstance, l_max: int | None = None, users=None,
                   budget: int = DEFAULT_ORACLE_BUDGET) -> MinrankResult:
    """Shortest feasible code by brute force over transmittable column subsets.

    Independent of the branch-and-bound route: no per-user rows, no pruning
    by rank, just level-by-level feasibility. The winning subset is rebuilt
    as a code and re-verified through the code checker before it is returned.
    Exhausting l_max without an answer raises OracleExhaustedError; with the
    default l_max the plain per-demand scheme guarantees an answer.
    """
    require_valid(inst)
    users = _resolve_users(inst, users)
    if l_max is None:
        l_max = len({inst.demand(i) for i in users})
    pool = _transmission_pool(inst)

    # Per-user bases of the side-info unit vectors, shared across subsets.
    unit_bases = _side_unit_bases(inst, users)
    demand_units = {i: unit_vector(inst.q, inst.num_messages, inst.demand(i)) for i in users}

    examined = 0
    for length in range(1, l_max + 1):
        for subset in itertools.combinations(pool, length):
            examined += 1
            if examined > budget:
                raise GuardExceededError(
                    f"exhaustive code search examined more than {budget} subsets"
                )
            if not _subset_serves(inst, users, unit_bases, demand_units, subset):
                continue
            code = EmbeddedIndexCode(
                inst, tuple(Transmission(sender, vec) for vec, sender in subset)
            )
            _recheck_through_code_path(inst, users, code)
            stats = {
                "subsets_examined": examined,
                "pool_size": len(pool),
                "l_max": l_max,
            }
            return MinrankResult(length, users, None, code, stats)
    raise OracleExhaustedError(l_max)


def _subset_serves(inst, users, unit_bases, demand_units, subset) -> bool:
    for i in users:
        basis = unit_bases[i]
        for vec, _sender in subset:
            basis, _ = basis_insert(basis, vec)
        if not in_span(basis, demand_units[i]):
            return False
    return True


def _recheck_through_code_path(inst, users, code) -> None:
    """Dual-route confirmation of an oracle hit via the code checker."""
    if len(users) == inst.num_users:
        report = verify_code(code, inst)
        assert report.overall, "oracle accepted a code the checker rejects"
    else:
        assert not support_violations(code)
        columns = [t.coeffs for t in code.transmissions]
        assert all(decodable_from(inst, columns, i) for i in users), \
            "oracle accepted a code the checker rejects"


def complexity_report(inst: EicpInstance, users=None,
                      candidate_sizes: dict[int, int] | None = None) -> dict:
    """Search-space sizes as exact integers; formulas only, nothing is enumerated.

    The historical whole-matrix formulation enumerates q^(sum |K_i|^2)
    stacked fitting matrices, pairs each with q^(sum |K_i|) interference
    choices, and spends a rank computation on each matrix and each pair. The
    per-user candidate formulation caps the assignment space at q^(sum |K_i|)
    before filtering; `filtered_product` is the space actually searched.
    """
    users = _resolve_users(inst, users)
    q = int(inst.q)
    sizes = [len(inst.knows(i)) for i in users]
    sum_k = sum(sizes)
    sum_k_sq = sum(s * s for s in sizes)
    report = {
        "q": q,
        "users": list(users),
        "sum_side_info": sum_k,
        "sum_side_info_sq": sum_k_sq,
        "old_matrices": q ** sum_k_sq,
        "old_matrix_demand_pairs": q ** (sum_k_sq + sum_k),
        "old_rank_computations": q ** sum_k_sq * (q ** sum_k + 1),
        "new_assignment_space": q ** sum_k,
    }
    if candidate_sizes is not None:
        product = 1
        for i in users:
            product *= candidate_sizes[i]
        report["filtered_candidates_per_user"] = dict(candidate_sizes)
        report["filtered_product"] = product
    return report


def graph_candidate_supports(pg: BipartiteProblemGraph, user: int,
                             limit: int = CANDIDATES_PER_USER_LIMIT) -> set[frozenset[int]]:
    """Candidate supports read off the directed problem graph alone.

    A support is the demanded message plus any subset of messages the user
    both holds and shares with a transmitter that also holds the demand. Over
    F_2 these are exactly the supports of build_candidates.
    """
    d = pg.user_in(user)[0]
    side = set(pg.user_out(user))
    out: set[frozenset[int]] = set()
    for j in range(1, pg.num_users + 1):
        if j == user:
            continue
        held = set(pg.user_out(j))
        if d not in held:
            continue
        shared = sorted(side & held)
        if 2 ** len(shared) > limit:
            raise GuardExceededError(
                f"support enumeration for users {user},{j} exceeds {limit}"
            )
        for r in range(len(shared) + 1):
            for combo in itertools.combinations(shared, r):
                out.add(frozenset({d, *combo}))
    return out
