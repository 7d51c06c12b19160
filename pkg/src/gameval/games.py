"""One-round two-prover games with exact rational question distributions.

A game is a finite weighted list of (s, t, predicate) triples: the verifier
samples a triple, sends question s to Alice and t to Bob, and accepts answers
(a, b) iff the predicate holds.  Weights are `fractions.Fraction` and always
sum to exactly 1, so products and repetitions stay exact.

All types are immutable; every operation returns a fresh game.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

GAME_FORMAT_VERSION = "gameval-1"

# Answer-pair constraints come in two kinds.  A "matrix" predicate is an
# explicit kA x kB table of accepted pairs.  A "permutation" predicate accepts
# (a, b) iff b == sigma[a]; games whose predicates are all permutations are
# the unique games.
MATRIX = "matrix"
PERMUTATION = "permutation"


class GameFormatError(ValueError):
    """Raised when a serialized game fails validation on load."""


@dataclass(frozen=True)
class Predicate:
    kind: str
    accept: tuple[tuple[int, ...], ...] | None = None
    sigma: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind == MATRIX:
            if self.accept is None or self.sigma is not None:
                raise ValueError("matrix predicate needs an accept table only")
            if not self.accept or any(len(r) != len(self.accept[0]) for r in self.accept):
                raise ValueError("accept table must be rectangular and nonempty")
            if any(cell not in (0, 1) for row in self.accept for cell in row):
                raise ValueError("accept table entries must be 0 or 1")
        elif self.kind == PERMUTATION:
            if self.sigma is None or self.accept is not None:
                raise ValueError("permutation predicate needs sigma only")
            if sorted(self.sigma) != list(range(len(self.sigma))):
                raise ValueError(f"sigma is not a permutation: {self.sigma}")
        else:
            raise ValueError(f"unknown predicate kind: {self.kind!r}")

    @staticmethod
    def from_matrix(rows: Iterable[Iterable[int]]) -> "Predicate":
        return Predicate(MATRIX, accept=tuple(tuple(int(bool(c)) for c in r) for r in rows))

    @staticmethod
    def from_permutation(sigma: Iterable[int]) -> "Predicate":
        return Predicate(PERMUTATION, sigma=tuple(int(a) for a in sigma))

    @staticmethod
    def equality(k: int) -> "Predicate":
        return Predicate.from_permutation(range(k))

    @staticmethod
    def single_cell(kA: int, kB: int, a: int, b: int) -> "Predicate":
        """Matrix predicate accepting exactly one answer pair."""
        return Predicate.from_matrix(
            [[1 if (i, j) == (a, b) else 0 for j in range(kB)] for i in range(kA)])

    def accepts(self, a: int, b: int) -> bool:
        if self.kind == PERMUTATION:
            return self.sigma[a] == b
        return bool(self.accept[a][b])

    def shape(self) -> tuple[int, int]:
        if self.kind == PERMUTATION:
            k = len(self.sigma)
            return k, k
        return len(self.accept), len(self.accept[0])

    def as_matrix(self) -> tuple[tuple[int, ...], ...]:
        """The predicate as an explicit accept table (permutations expanded)."""
        if self.kind == MATRIX:
            return self.accept
        k = len(self.sigma)
        return tuple(tuple(1 if self.sigma[a] == b else 0 for b in range(k))
                     for a in range(k))


@dataclass(frozen=True)
class WeightedTriple:
    s: int
    t: int
    weight: Fraction
    predicate: Predicate

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError(f"triple weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class Game:
    """Distribution over weighted (s, t, predicate) triples.

    nA, nB are the question counts and kA, kB the answer alphabet sizes of
    the two provers.  Weights must sum to exactly 1 in rational arithmetic.
    """
    name: str
    nA: int
    nB: int
    kA: int
    kB: int
    triples: tuple[WeightedTriple, ...]

    def __post_init__(self):
        if min(self.nA, self.nB, self.kA, self.kB) < 1:
            raise ValueError("question and answer counts must be at least 1")
        total = Fraction(0)
        for tr in self.triples:
            if not (0 <= tr.s < self.nA and 0 <= tr.t < self.nB):
                raise ValueError(f"question indices out of range: ({tr.s},{tr.t})")
            if tr.predicate.shape() != (self.kA, self.kB):
                raise ValueError(
                    f"predicate shape {tr.predicate.shape()} != ({self.kA},{self.kB})")
            total += tr.weight
        if total != 1:
            raise ValueError(f"triple weights sum to {total}, expected 1")

    @property
    def unique(self) -> bool:
        """True iff every predicate is a permutation constraint (and kA == kB)."""
        return self.kA == self.kB and all(
            tr.predicate.kind == PERMUTATION for tr in self.triples)

    @property
    def xor(self) -> bool:
        """True iff the game is unique with binary answers."""
        return self.unique and self.kA == 2

    @property
    def probabilistic_predicates(self) -> bool:
        """True iff some question pair (s, t) carries more than one predicate."""
        seen = set()
        for tr in self.triples:
            if (tr.s, tr.t) in seen:
                return True
            seen.add((tr.s, tr.t))
        return False

    def question_pairs(self) -> list[tuple[int, int]]:
        """Distinct (s, t) pairs in the support, in first-appearance order."""
        out, seen = [], set()
        for tr in self.triples:
            if (tr.s, tr.t) not in seen:
                seen.add((tr.s, tr.t))
                out.append((tr.s, tr.t))
        return out


def make_chsh() -> Game:
    """The CHSH game: random question bits x, y; accept iff a xor b = x and y.

    Parity constraints on two answers are permutations of {0,1}, so the game
    is encoded with permutation predicates and classifies as an XOR game.
    """
    triples = []
    for x in range(2):
        for y in range(2):
            sigma = (1, 0) if x & y else (0, 1)
            triples.append(WeightedTriple(x, y, Fraction(1, 4),
                                          Predicate.from_permutation(sigma)))
    return Game("chsh", 2, 2, 2, 2, tuple(triples))


def make_odd_cycle(n: int) -> Game:
    """Two-coloring game on an odd cycle of length n.

    Uniform over 2n constraints: on each vertex an equality loop, on each of
    the n cycle edges a must-differ constraint.  Both are permutations of
    {0,1}, so the game is an XOR game.
    """
    if n % 2 == 0 or n < 3:
        raise ValueError(f"cycle length must be odd and >= 3, got {n}")
    w = Fraction(1, 2 * n)
    eq, ne = Predicate.equality(2), Predicate.from_permutation((1, 0))
    triples = []
    for s in range(n):
        triples.append(WeightedTriple(s, s, w, eq))
        triples.append(WeightedTriple(s, (s + 1) % n, w, ne))
    return Game(f"odd-cycle-{n}", n, n, 2, 2, tuple(triples))


def make_line_game(n: int) -> Game:
    """Two-coloring game on a path of n vertices with loops, ends pinned.

    The verifier picks uniformly one of the 2n-1 constraints (n loops plus
    n-1 path edges).  All are equality except the two end loops: the loop on
    the first vertex accepts only (0, 0) and the loop on the last vertex only
    (1, 1).  The pinned loops are matrix predicates, so the game is not
    unique.
    """
    if n < 2:
        raise ValueError(f"line game needs n >= 2, got {n}")
    w = Fraction(1, 2 * n - 1)
    eq = Predicate.equality(2)
    triples = []
    for s in range(n):
        if s == 0:
            pred = Predicate.single_cell(2, 2, 0, 0)
        elif s == n - 1:
            pred = Predicate.single_cell(2, 2, 1, 1)
        else:
            pred = eq
        triples.append(WeightedTriple(s, s, w, pred))
    for s in range(n - 1):
        triples.append(WeightedTriple(s, s + 1, w, eq))
    return Game(f"line-{n}", n, n, 2, 2, tuple(triples))


# Involutions used by the unique variants of the line game, on answers {0,1,2}.
_SWAP_12 = (0, 2, 1)
_SWAP_02 = (2, 1, 0)


def make_unique_line_game(n: int) -> Game:
    """Unique version of the line game: 3 answers, pinning via split loops.

    Every constraint is the identity permutation, except the two end loops,
    each of which splits into two half-weight triples:  the first-vertex loop
    into identity and the swap of answers 1,2;  the last-vertex loop into
    identity and the swap of answers 0,2.  The end question pairs therefore
    carry two predicates each (probabilistic predicates).
    """
    if n < 2:
        raise ValueError(f"unique line game needs n >= 2, got {n}")
    m = 2 * n - 1
    w, half = Fraction(1, m), Fraction(1, 2 * m)
    ident = Predicate.equality(3)
    triples = []
    for s in range(n):
        if s == 0:
            triples.append(WeightedTriple(0, 0, half, ident))
            triples.append(WeightedTriple(0, 0, half, Predicate.from_permutation(_SWAP_12)))
        elif s == n - 1:
            triples.append(WeightedTriple(s, s, half, ident))
            triples.append(WeightedTriple(s, s, half, Predicate.from_permutation(_SWAP_02)))
        else:
            triples.append(WeightedTriple(s, s, w, ident))
    for s in range(n - 1):
        triples.append(WeightedTriple(s, s + 1, w, ident))
    return Game(f"unique-line-{n}", n, n, 3, 3, tuple(triples))


def make_unique_line_game_deterministic(n: int) -> Game:
    """Unique line game variant with one predicate per question pair.

    Adds a gadget vertex at each end of the path.  The split end loops are
    replaced by oriented constraints between the gadget vertex and its
    neighbor: equality in one direction and the pinning swap in the other,
    plus an equality loop on the gadget vertex.  Ordered question pairs make
    the two directions distinct pairs, so no pair carries two predicates.

    Vertex layout (0-based questions): 0 is the left gadget, 1..n the path,
    n+1 the right gadget.  Uniform weights over all 2n+5 constraints.
    """
    if n < 2:
        raise ValueError(f"unique line game needs n >= 2, got {n}")
    ident = Predicate.equality(3)
    cons: list[tuple[int, int, Predicate]] = []
    for v in range(1, n + 1):
        cons.append((v, v, ident))
    for v in range(1, n):
        cons.append((v, v + 1, ident))
    cons.append((0, 0, ident))
    cons.append((1, 0, ident))
    cons.append((0, 1, Predicate.from_permutation(_SWAP_12)))
    cons.append((n + 1, n + 1, ident))
    cons.append((n, n + 1, ident))
    cons.append((n + 1, n, Predicate.from_permutation(_SWAP_02)))
    w = Fraction(1, len(cons))
    triples = tuple(WeightedTriple(s, t, w, p) for (s, t, p) in cons)
    return Game(f"unique-line-det-{n}", n + 2, n + 2, 3, 3, triples)


def _product_predicate(p1: Predicate, p2: Predicate, k1: tuple[int, int],
                       k2: tuple[int, int]) -> Predicate:
    if p1.kind == PERMUTATION and p2.kind == PERMUTATION:
        ka2 = len(p2.sigma)
        sigma = tuple(p1.sigma[a1] * ka2 + p2.sigma[a2]
                      for a1 in range(len(p1.sigma)) for a2 in range(ka2))
        return Predicate.from_permutation(sigma)
    m1, m2 = p1.as_matrix(), p2.as_matrix()
    kA1, kB1 = k1
    kA2, kB2 = k2
    rows = []
    for a1 in range(kA1):
        for a2 in range(kA2):
            rows.append([m1[a1][b1] * m2[a2][b2]
                         for b1 in range(kB1) for b2 in range(kB2)])
    return Predicate.from_matrix(rows)


def product(g1: Game, g2: Game) -> Game:
    """Product game: both instances played at once, accept iff both accept.

    Question and answer indices are pairs flattened row-major:
    (i, j) -> i * n2 + j.  Triple weights multiply, so they still sum to 1
    exactly.  Products of permutation predicates stay permutations.
    """
    triples = []
    for t1 in g1.triples:
        for t2 in g2.triples:
            triples.append(WeightedTriple(
                t1.s * g2.nA + t2.s,
                t1.t * g2.nB + t2.t,
                t1.weight * t2.weight,
                _product_predicate(t1.predicate, t2.predicate,
                                   (g1.kA, g1.kB), (g2.kA, g2.kB))))
    return Game(f"({g1.name})x({g2.name})",
                g1.nA * g2.nA, g1.nB * g2.nB,
                g1.kA * g2.kA, g1.kB * g2.kB, tuple(triples))


def repeat(g: Game, reps: int, max_triples: int = 200_000) -> Game:
    """reps-fold parallel repetition of g (iterated product with itself)."""
    if reps < 1:
        raise ValueError(f"repetition count must be >= 1, got {reps}")
    if len(g.triples) ** reps > max_triples:
        raise ValueError(
            f"repeat({g.name}, {reps}) would have {len(g.triples) ** reps} "
            f"triples, above the cap of {max_triples}")
    out = g
    for _ in range(reps - 1):
        out = product(out, g)
    return out


# ---------------------------------------------------------------------------
# Canonical JSON format.

def game_to_json(g: Game) -> dict:
    triples = []
    for tr in g.triples:
        if tr.predicate.kind == PERMUTATION:
            pred = {"kind": PERMUTATION, "sigma": list(tr.predicate.sigma)}
        else:
            pred = {"kind": MATRIX, "accept": [list(r) for r in tr.predicate.accept]}
        triples.append({
            "s": tr.s, "t": tr.t,
            "weight": [tr.weight.numerator, tr.weight.denominator],
            "predicate": pred,
        })
    return {"version": GAME_FORMAT_VERSION, "name": g.name,
            "nA": g.nA, "nB": g.nB, "kA": g.kA, "kB": g.kB,
            "triples": triples}


def game_to_json_str(g: Game) -> str:
    return json.dumps(game_to_json(g), sort_keys=True, separators=(",", ":")) + "\n"


def game_from_json(doc: dict) -> Game:
    try:
        if doc.get("version") != GAME_FORMAT_VERSION:
            raise GameFormatError(
                f"unsupported game format version: {doc.get('version')!r}")
        triples = []
        for tr in doc["triples"]:
            num, den = tr["weight"]
            pd = tr["predicate"]
            if pd["kind"] == PERMUTATION:
                pred = Predicate.from_permutation(pd["sigma"])
            elif pd["kind"] == MATRIX:
                pred = Predicate.from_matrix(pd["accept"])
            else:
                raise GameFormatError(f"unknown predicate kind {pd['kind']!r}")
            triples.append(WeightedTriple(int(tr["s"]), int(tr["t"]),
                                          Fraction(int(num), int(den)), pred))
        return Game(str(doc["name"]), int(doc["nA"]), int(doc["nB"]),
                    int(doc["kA"]), int(doc["kB"]), tuple(triples))
    except GameFormatError:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise GameFormatError(f"invalid game document: {exc}") from exc


def save_game(g: Game, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(game_to_json_str(g))


def load_game(path) -> Game:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GameFormatError(f"not valid JSON: {exc}") from exc
    return game_from_json(doc)
