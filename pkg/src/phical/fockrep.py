"""Quantum βγ-systems acting on truncated vacuum modules.

States are linear combinations of canonical words in the creation modes
(mode <= -1) applied to the vacuum.  A word is a tuple of ``(gen, mode)``
letters, written left to right as operators, so the rightmost letter acts
first.  Canonical order: all β letters before all γ letters, modes weakly
increasing inside each block.

Acting by a mode on a canonical word moves the new letter into place with
the exchange relations.  Every correction sum is cut off exactly where the
raised mode starts to annihilate the state it hits:

* trig: the relations preserve the weight wt β_n = -n, wt γ_n = -n - 2 and
  every state has weight >= 0, so β_j kills a word of weight W once j > W and
  γ_j once j > W - 2.  On the vacuum β_j vanishes for j >= 0 and γ_j for
  j >= -1, which makes γ_{-1} an annihilator: at q = 1 this is the standard
  βγ vacuum with γ̃_n playing the role of γ_{n+2};
* rat: with energy E = -(sum of modes), X_j kills a word once j >= E (the
  relations only ever raise the total mode).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from math import factorial
from typing import Dict, Iterable, List, Optional, Tuple

from .errors import CacheFormatError, PolicyError, WindowEscape
from .report import CheckReport
from .scalars import ONE, ZERO, Scalar, binomial
from .series import LaurentSeries, RationalExpr, ratio_expand

BETA, GAMMA = "b", "g"
GENERATORS = (BETA, GAMMA)
GEN_NAMES = {"b": BETA, "beta": BETA, "β": BETA, "g": GAMMA, "gamma": GAMMA, "γ": GAMMA}

Letter = Tuple[str, int]
Word = Tuple[Letter, ...]

MAGIC = b"PHICAL\0"
CACHE_VERSION = 1


def _key(letter: Letter):
    return (GENERATORS.index(letter[0]), letter[1])


def word_text(w: Word) -> str:
    return "*".join(f"{g}{n}" for g, n in w) if w else "1"


def parse_word(s: str) -> Word:
    if s == "1":
        return ()
    out = []
    for part in s.split("*"):
        out.append((part[0], int(part[1:])))
    return tuple(out)


def energy(w: Word) -> int:
    return -sum(n for _, n in w)


def trig_degree(w: Word) -> int:
    return sum(n + 1 for _, n in w)


def trig_weight(w: Word) -> int:
    return sum(-n if g == BETA else -n - 2 for g, n in w)


# ---------------------------------------------------------------------------
# System parameters and expansion coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SystemKind:
    tag: str
    q: Scalar = field(default_factory=Scalar.q)

    def __post_init__(self):
        if self.tag not in ("Trig", "Rat"):
            raise ValueError(f"unknown system {self.tag}")
        q = Scalar.coerce(self.q) if not isinstance(self.q, Scalar) else self.q
        object.__setattr__(self, "q", q)
        if q.is_zero():
            raise ValueError("q must be nonzero")

    @classmethod
    def make(cls, tag: str, q="symbolic") -> "SystemKind":
        tag = {"trig": "Trig", "rat": "Rat"}.get(tag.lower(), tag)
        if q in (None, "symbolic"):
            return cls(tag)
        if isinstance(q, str):
            q = Scalar.const(Fraction(q))
        return cls(tag, Scalar.coerce(q))

    @property
    def specialized(self) -> bool:
        return self.q.is_constant()

    def q_text(self) -> str:
        return "symbolic" if self.q == Scalar.q() else str(self.q)


@dataclass
class ExpansionCoeffs:
    lambda_: List[Scalar]
    lambda_prime: List[Scalar]
    mu: List[Scalar]
    mu_prime: List[Scalar]
    order: int

    def specialize(self, q0) -> "ExpansionCoeffs":
        """Evaluate symbolic coefficients at q0; μ at q0 = 1 hits a pole."""
        ev = lambda seq: [Scalar.const(c.eval(q0)) for c in seq]  # noqa: E731
        return ExpansionCoeffs(ev(self.lambda_), ev(self.lambda_prime), ev(self.mu),
                               ev(self.mu_prime), self.order)

    def to_json(self) -> dict:
        return {"order": self.order,
                "lambda": [str(c) for c in self.lambda_],
                "lambda_prime": [str(c) for c in self.lambda_prime],
                "mu": [str(c) for c in self.mu],
                "mu_prime": [str(c) for c in self.mu_prime]}


def _lambda_seqs(q: Scalar, order: int):
    f = RationalExpr.parse("(t - q)/(q*t - 1)")
    g = RationalExpr.parse("(q*t - 1)/(t - q)")
    if q != Scalar.q():
        f, g = _subst_q(f, q), _subst_q(g, q)
    _, lam = ratio_expand(f, "t", order)
    _, lamp = ratio_expand(g, "t", order)
    return lam, lamp


def _subst_q(f: RationalExpr, q: Scalar) -> RationalExpr:
    return f.substitute_scalar(q.constant()) if q.is_constant() else f


def _mu_seqs(q: Scalar, order: int):
    """Taylor coefficients in u of (e^u - q)/(q e^u - 1) and its reciprocal.

    q is put in before dividing, so a common zero at u = 0 (q = 1) cancels
    instead of producing poles.
    """
    n = order + 2
    expm1 = {k: Fraction(1, factorial(k)) for k in range(1, n + 1)}
    num = LaurentSeries({0: ONE - q, **expm1}, "u", hi=n + 1)
    den = LaurentSeries({0: q - ONE, **{k: q * c for k, c in expm1.items()}}, "u", hi=n + 1)
    v = min(num.valuation(), den.valuation())
    num, den = num.shift(-v), den.shift(-v)
    mu = num * den.invert_unit()
    mup = den * num.invert_unit()
    return [mu.coefficient(k) for k in range(order)], [mup.coefficient(k) for k in range(order)]


def expansion_coeffs(kind: SystemKind, order: int) -> ExpansionCoeffs:
    lam, lamp = _lambda_seqs(kind.q, order)
    mu, mup = _mu_seqs(kind.q, order)
    return ExpansionCoeffs(lam, lamp, mu, mup, order)


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

class ModuleState:
    """Finite combination of canonical words applied to the vacuum."""

    __slots__ = ("terms", "depth_bound", "mode_floor")

    def __init__(self, terms: Optional[Dict[Word, Scalar]] = None, depth_bound: Optional[int] = None,
                 mode_floor: Optional[int] = None):
        self.terms: Dict[Word, Scalar] = {w: c for w, c in (terms or {}).items() if c}
        self.depth_bound = depth_bound
        self.mode_floor = mode_floor

    @classmethod
    def vacuum(cls, **kw) -> "ModuleState":
        return cls({(): ONE}, **kw)

    @classmethod
    def word(cls, w: Word, c=ONE, **kw) -> "ModuleState":
        return cls({tuple(w): Scalar.coerce(c)}, **kw)

    def _like(self, terms):
        return ModuleState(terms, self.depth_bound, self.mode_floor)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __add__(self, other: "ModuleState") -> "ModuleState":
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out[w] + c if w in out else c
        return self._like(out)

    def __neg__(self):
        return self._like({w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s):
        s = Scalar.coerce(s)
        if not s:
            return self._like({})
        return self._like({w: c * s for w, c in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, ModuleState):
            return self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items(), key=lambda t: t[0])))

    def in_window(self, depth: int, floor: int) -> bool:
        return all(len(w) <= depth and all(n >= floor for _, n in w) for w in self.terms)

    def substitute_scalar(self, q0) -> "ModuleState":
        return self._like({w: Scalar.const(c.eval(q0)) for w, c in self.terms.items()})

    def items(self):
        return sorted(self.terms.items(), key=lambda t: (len(t[0]), [_key(l) for l in t[0]]))

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({c})*{word_text(w)}" for w, c in self.items())

    __repr__ = __str__

    def to_json(self):
        return [[word_text(w), str(c)] for w, c in self.items()]

    @classmethod
    def from_json(cls, data, **kw) -> "ModuleState":
        return cls({parse_word(w): Scalar.parse(c) for w, c in data}, **kw)


# ---------------------------------------------------------------------------
# Truncation policy and the module
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncPolicy:
    depth_bound: int
    mode_floor: int
    correction_order: Optional[int] = None

    def __post_init__(self):
        if self.depth_bound < 0:
            raise PolicyError("depth bound must be nonnegative")
        if self.mode_floor > -1:
            raise PolicyError("mode floor must be at most -1")
        need = self.depth_bound * abs(self.mode_floor)
        if self.correction_order is None:
            object.__setattr__(self, "correction_order", need)
        elif self.correction_order < need:
            raise PolicyError(
                f"correction order {self.correction_order} below depth*|floor| = {need}")

    def to_json(self):
        return {"depth": self.depth_bound, "floor": self.mode_floor, "K": self.correction_order}


class BgModule:
    """Vacuum module of the trig or rat system, truncated by a policy."""

    def __init__(self, kind: SystemKind, policy: TruncPolicy):
        self.kind = kind
        self.policy = policy
        self.trig = kind.tag == "Trig"
        self._coef_order = 0
        self._coeffs: Optional[ExpansionCoeffs] = None
        self._memo: Dict[Tuple[str, int, Word], Dict[Word, Scalar]] = {}
        self._ensure(max(8, 2 * policy.correction_order + 4))
        # diagonal coefficient of a generator with itself
        c0 = self._lam(0) if self.trig else self._mu(0)
        self.repeat_ok = c0 == 1
        self._diag_inv = None if self.repeat_ok else (ONE - c0).inv()

    # -- coefficients (grown on demand)
    def _ensure(self, k: int):
        if k < self._coef_order:
            return
        order = max(2 * self._coef_order, k + 1, 8)
        self._coeffs = expansion_coeffs(self.kind, order)
        self._coef_order = order

    def _lam(self, k):
        self._ensure(k)
        return self._coeffs.lambda_[k]

    def _lamp(self, k):
        self._ensure(k)
        return self._coeffs.lambda_prime[k]

    def _mu(self, k):
        self._ensure(k)
        return self._coeffs.mu[k]

    def _mup(self, k):
        self._ensure(k)
        return self._coeffs.mu_prime[k]

    @property
    def coeffs(self) -> ExpansionCoeffs:
        return self._coeffs

    # -- basis
    def vacuum(self) -> ModuleState:
        return ModuleState.vacuum(depth_bound=self.policy.depth_bound, mode_floor=self.policy.mode_floor)

    def state(self, terms) -> ModuleState:
        return ModuleState(terms, self.policy.depth_bound, self.policy.mode_floor)

    def top_mode(self, gen: str) -> int:
        """Highest creation mode of a generator."""
        return -2 if self.trig and gen == GAMMA else -1

    def letters(self) -> List[Letter]:
        return sorted(((g, n) for g in GENERATORS for n in range(self.policy.mode_floor, self.top_mode(g) + 1)),
                      key=_key)

    def basis(self) -> List[Word]:
        out = []
        letters = self.letters()
        for L in range(self.policy.depth_bound + 1):
            for combo in combinations_with_replacement(letters, L):
                if not self.repeat_ok and len(set(combo)) < len(combo):
                    continue
                out.append(tuple(combo))
        return out

    def grade(self, w: Word) -> int:
        """Weight (trig) or energy (rat) of a word."""
        return trig_weight(w) if self.trig else energy(w)

    def graded_dims(self, max_degree: int) -> List[int]:
        dims = [0] * (max_degree + 1)
        for w in self.basis():
            e = self.grade(w)
            if e <= max_degree:
                dims[e] += 1
        return dims

    # -- annihilation
    def kill_bound(self, gen: str, w: Word) -> int:
        """Least j with gen_i w = 0 for every i >= j."""
        if not self.trig:
            return energy(w)
        if gen == GAMMA:
            return trig_weight(w) - 1
        return trig_weight(w) + 1 if w else 0

    def state_kill_bound(self, gen: str, s) -> int:
        words = s.terms if isinstance(s, ModuleState) else s
        return max((self.kill_bound(gen, w) for w in words), default=-(10 ** 9))

    # -- action
    def apply_mode(self, gen: str, n: int, state: ModuleState, strict: bool = True) -> ModuleState:
        gen = GEN_NAMES.get(gen, gen)
        if gen not in GENERATORS:
            raise ValueError(f"unknown generator {gen}")
        out: Dict[Word, Scalar] = {}
        for w, c in state.terms.items():
            _acc(out, self._act(gen, n, w), c)
        res = self.state(out)
        if strict and not res.in_window(self.policy.depth_bound, self.policy.mode_floor):
            raise WindowEscape(
                f"{gen}_{n} leaves depth {self.policy.depth_bound} / floor {self.policy.mode_floor}")
        return res

    def apply_word(self, word: Iterable[Letter], state: Optional[ModuleState] = None,
                   strict: bool = False) -> ModuleState:
        """Apply letters right to left (the rightmost acts first)."""
        s = self.vacuum() if state is None else state
        for g, n in reversed(list(word)):
            s = self.apply_mode(g, n, s, strict=strict)
        return s

    def _act_on(self, gen, n, terms: Dict[Word, Scalar]) -> Dict[Word, Scalar]:
        out: Dict[Word, Scalar] = {}
        for w, c in terms.items():
            _acc(out, self._act(gen, n, w), c)
        return out

    def _act(self, x: str, j: int, w: Word) -> Dict[Word, Scalar]:
        key = (x, j, w)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        res = self._compute(x, j, w)
        self._memo[key] = res
        return res

    def _compute(self, x: str, j: int, w: Word) -> Dict[Word, Scalar]:
        if j >= self.kill_bound(x, w):
            return {}
        creation = j <= self.top_mode(x)
        if not w:
            if not creation:
                raise AssertionError(f"{x}_{j} survives on the vacuum")
            return {((x, j),): ONE}
        y, n = w[0]
        rest = w[1:]
        if creation:
            kx, ky = _key((x, j)), _key((y, n))
            if kx < ky or (kx == ky and self.repeat_ok):
                return {((x, j),) + w: ONE}
        if self.trig:
            return self._trig_swap(x, j, y, n, rest)
        return self._rat_swap(x, j, y, n, rest)

    def _two(self, a: Letter, b: Letter, rest: Word) -> Dict[Word, Scalar]:
        """a · b · rest, with b acting first."""
        inner = self._act(b[0], b[1], rest)
        if not inner:
            return {}
        return self._act_on(a[0], a[1], inner)

    def _trig_swap(self, x, j, y, n, rest) -> Dict[Word, Scalar]:
        out: Dict[Word, Scalar] = {}
        if x == y:
            # A_j A_n = Σ_k λ_k A_{n-k} A_{j+k}
            diag = (j == n)
            bound = self.kill_bound(x, rest)
            k = 1 if diag else 0
            while j + k < bound:
                _acc(out, self._two((x, n - k), (x, j + k), rest), self._lam(k))
                k += 1
            return _scaled(out, self._diag_inv) if diag else out
        if x == BETA:
            # β_j γ_n = Σ_k λ'_k γ_{n-k} β_{j+k} + δ_{j+n+2,0}
            bound = self.kill_bound(BETA, rest)
            k = 0
            while j + k < bound:
                _acc(out, self._two((GAMMA, n - k), (BETA, j + k), rest), self._lamp(k))
                k += 1
            if j + n + 2 == 0:
                _acc(out, {rest: ONE}, ONE)
            return out
        # γ_j β_n = (1/λ'_0) [β_n γ_j - Σ_{k>=1} λ'_k γ_{j-k} β_{n+k} - δ_{j+n+2,0}]
        _acc(out, self._two((BETA, n), (GAMMA, j), rest), ONE)
        bound = self.kill_bound(BETA, rest)
        k = 1
        while n + k < bound:
            _acc(out, self._two((GAMMA, j - k), (BETA, n + k), rest), -self._lamp(k))
            k += 1
        if j + n + 2 == 0:
            _acc(out, {rest: ONE}, -ONE)
        return _scaled(out, self._lamp(0).inv())

    def _double_sum(self, out, left_gen, right_gen, left0, right0, rest, coef, skip_origin):
        """Σ_{k,i>=0} C(k,i)(-1)^i coef(k) L_{left0+i} R_{right0+k-i} acting on rest."""
        bound = self.kill_bound(right_gen, rest)
        d = 0
        while right0 + d < bound:
            inner = self._act(right_gen, right0 + d, rest)
            if inner:
                ib = self.state_kill_bound(left_gen, inner)
                i = 0
                while left0 + i < ib:
                    if not (skip_origin and d == 0 and i == 0):
                        k = d + i
                        c = coef(k) * Scalar.const(binomial(k, i) * (-1) ** i)
                        if c:
                            _acc(out, self._act_on(left_gen, left0 + i, inner), c)
                    i += 1
            d += 1

    def _rat_swap(self, x, j, y, n, rest) -> Dict[Word, Scalar]:
        out: Dict[Word, Scalar] = {}
        if x == y:
            # A_j A_n = Σ C(k,i)(-1)^i μ_k A_{n+i} A_{j+k-i}
            diag = (j == n)
            self._double_sum(out, x, x, n, j, rest, self._mu, skip_origin=diag)
            return _scaled(out, self._diag_inv) if diag else out
        if x == BETA:
            # β_j γ_n = Σ C(k,i)(-1)^i μ'_k γ_{n+i} β_{j+k-i} + δ_{j+n+1,0}
            self._double_sum(out, GAMMA, BETA, n, j, rest, self._mup, skip_origin=False)
            if j + n + 1 == 0:
                _acc(out, {rest: ONE}, ONE)
            return out
        # γ_j β_n = (1/μ'_0) [β_n γ_j - Σ_{(k,i) != 0} C(k,i)(-1)^i μ'_k γ_{j+i} β_{n+k-i} - δ_{j+n+1,0}]
        corr: Dict[Word, Scalar] = {}
        self._double_sum(corr, GAMMA, BETA, j, n, rest, self._mup, skip_origin=True)
        _acc(out, self._two((BETA, n), (GAMMA, j), rest), ONE)
        _acc(out, corr, -ONE)
        if j + n + 1 == 0:
            _acc(out, {rest: ONE}, -ONE)
        return _scaled(out, self._mup(0).inv())

    # -- relation checks
    def relation_residual(self, rel: str, m: int, n: int, w: ModuleState) -> ModuleState:
        """LHS - RHS of one component relation applied to w ('bb', 'gg' or 'bg')."""
        a, b = {"bb": (BETA, BETA), "gg": (GAMMA, GAMMA), "bg": (BETA, GAMMA)}[rel]
        lhs = self.apply_mode(a, m, self.apply_mode(b, n, w, strict=False), strict=False)
        rhs: Dict[Word, Scalar] = {}
        terms = dict(w.terms)
        if self.trig:
            coef = self._lam if a == b else self._lamp
            bound = self.state_kill_bound(a, w)
            k = 0
            while m + k < bound:
                inner = self._act_on(a, m + k, terms)
                if inner:
                    _acc(rhs, self._act_on(b, n - k, inner), coef(k))
                k += 1
            delta = a != b and m + n + 2 == 0
        else:
            coef = self._mu if a == b else self._mup
            bound = self.state_kill_bound(a, w)
            d = 0
            while m + d < bound:
                inner = self._act_on(a, m + d, terms)
                if inner:
                    ib = self.state_kill_bound(b, inner)
                    i = 0
                    while n + i < ib:
                        k = d + i
                        c = coef(k) * Scalar.const(binomial(k, i) * (-1) ** i)
                        if c:
                            _acc(rhs, self._act_on(b, n + i, inner), c)
                        i += 1
                d += 1
            delta = a != b and m + n + 1 == 0
        if delta:
            _acc(rhs, terms, ONE)
        return lhs - self.state(rhs)

    def verify_relations(self, sample: Optional[Iterable[Word]] = None, window: int = 3,
                         relations=("bb", "gg", "bg")) -> CheckReport:
        sample = list(self.basis() if sample is None else sample)
        violations = []
        for w in sample:
            st = self.state({w: ONE}) if not isinstance(w, ModuleState) else w
            for rel in relations:
                for m in range(-window, window + 1):
                    for n in range(-window, window + 1):
                        r = self.relation_residual(rel, m, n, st)
                        if not r.is_zero():
                            violations.append({"relation": rel, "m": m, "n": n,
                                               "state": str(st), "residual": str(r)})
        return CheckReport.from_checks(f"{self.kind.tag.lower()}-relations", violations,
                                       q=self.kind.q_text(), window=window, states=len(sample))

    # -- cache
    def build_table(self, modes: Optional[Iterable[int]] = None):
        """Fill the action memo for every basis word and mode in range."""
        modes = list(range(self.policy.mode_floor, self.policy.correction_order + 1)) if modes is None else list(modes)
        for w in self.basis():
            for g in GENERATORS:
                for n in modes:
                    self._act(g, n, w)
        return self

    def action_table(self):
        basis = set(self.basis())
        rows = []
        for (g, n, w), res in self._memo.items():
            if w in basis:
                rows.append((g, n, w, res))
        rows.sort(key=lambda r: (GENERATORS.index(r[0]), r[1], len(r[2]), [_key(l) for l in r[2]]))
        return rows

    def to_bytes(self) -> bytes:
        header = {"format": "phical-qbg", "kind": self.kind.tag, "q": self.kind.q_text(),
                  "policy": self.policy.to_json()}
        payload = {
            "header": header,
            "basis": [word_text(w) for w in self.basis()],
            "actions": [[g, n, word_text(w), self.state(res).to_json()]
                        for g, n, w, res in self.action_table()],
        }
        body = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return MAGIC + bytes([CACHE_VERSION]) + body.encode("utf-8")

    @classmethod
    def from_bytes(cls, data: bytes) -> "BgModule":
        header, payload = read_cache(data)
        kind = SystemKind.make(header["kind"], header["q"])
        pol = header["policy"]
        mod = cls(kind, TruncPolicy(pol["depth"], pol["floor"], pol["K"]))
        if [word_text(w) for w in mod.basis()] != payload["basis"]:
            raise CacheFormatError("basis in cache does not match the rebuilt basis")
        for g, n, w, res in payload["actions"]:
            mod._memo[(g, n, parse_word(w))] = ModuleState.from_json(res).terms
        return mod

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "BgModule":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def read_cache(data: bytes):
    if not data.startswith(MAGIC) or len(data) < len(MAGIC) + 1:
        raise CacheFormatError("not a phical cache file")
    version = data[len(MAGIC)]
    if version != CACHE_VERSION:
        raise CacheFormatError(f"unsupported cache version {version}")
    try:
        payload = json.loads(data[len(MAGIC) + 1:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CacheFormatError(f"corrupt cache payload: {e}") from e
    return payload["header"], payload


def _acc(out: Dict[Word, Scalar], terms: Dict[Word, Scalar], c: Scalar):
    if not c:
        return
    for w, v in terms.items():
        t = v * c
        if w in out:
            s = out[w] + t
            if s:
                out[w] = s
            else:
                del out[w]
        else:
            out[w] = t


def _scaled(terms: Dict[Word, Scalar], c: Scalar) -> Dict[Word, Scalar]:
    return {w: v * c for w, v in terms.items()}


def build_module(kind: SystemKind, policy: TruncPolicy) -> BgModule:
    return BgModule(kind, policy)


def apply_mode(module: BgModule, generator: str, n: int, state: ModuleState) -> ModuleState:
    return module.apply_mode(generator, n, state)


def verify_relations(module: BgModule, sample=None, window: int = 3) -> CheckReport:
    return module.verify_relations(sample, window)
