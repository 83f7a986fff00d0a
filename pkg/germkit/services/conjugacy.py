"""
Order-by-order formal conjugacies for semi-superattracting germs.

Every coordinate change is returned inside a ConjugationRecord whose residual
order is computed by direct composition. Conventions: a record for f → g holds
the change Φ with Φ∘f = g∘Φ.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from germkit.exceptions import (
    InvariantViolated,
    PreconditionError,
    ScalingObstruction,
    Unsupported,
)
from germkit.services.blowup import Rigidification, rigidify_semisuper
from germkit.services.germ import (
    Germ,
    GermKind,
    Matrix,
    classify,
    identity_germ,
    invert_matrix,
    linear_germ,
)
from germkit.services.scalars import (
    ONE,
    ZERO,
    GaussianRational,
    Modulus,
    Scalar,
    modulus_compare,
    nth_root,
    power_equals,
    root_of_unity_order,
)
from germkit.services.series import INFINITY, BiSeries, UniSeries

logger = logging.getLogger(__name__)


# ── Records ─────────────────────────────────────────────────────────────


@dataclass
class ConjugationRecord:
    source: Germ
    target: Germ
    change: Germ
    inverse: Germ | None
    order: int
    residual_order: int
    notes: list[str] = field(default_factory=list)
    # the solved coefficient series (φ or ψ) when the change was built from one
    series: BiSeries | None = None

    @property
    def inverse_known(self) -> bool:
        return self.inverse is not None

    @property
    def verified(self) -> bool:
        return self.residual_order > self.order

    def to_dict(self) -> dict:
        return {
            "change": [str(self.change.f1), str(self.change.f2)],
            "inverse_known": self.inverse_known,
            "order": self.order,
            "residual_order": self.residual_order,
            "verified": self.verified,
            "notes": list(self.notes),
        }


def verify_conjugacy(f: Germ, g: Germ, change: Germ) -> int:
    """First total order where Φ∘f − g∘Φ is nonzero, or truncation + 1."""
    lhs = change.compose(f)
    rhs = g.compose(change)
    d1, d2 = lhs.f1 - rhs.f1, lhs.f2 - rhs.f2
    first = min(d1.multiplicity(), d2.multiplicity())
    if first is INFINITY:
        return min(d1.trunc, d2.trunc) + 1
    return first


def certify(
    f: Germ,
    g: Germ,
    change: Germ,
    inverse: Germ | None,
    notes: list[str] | None = None,
    series: BiSeries | None = None,
) -> ConjugationRecord:
    order = min(f.trunc, g.trunc, change.trunc)
    residual = verify_conjugacy(f, g, change)
    record = ConjugationRecord(f, g, change, inverse, order, residual, list(notes or []), series)
    if not record.verified:
        logger.warning("conjugacy residual at order %d (< %d)", residual, order + 1)
    return record


def identity_record(f: Germ) -> ConjugationRecord:
    ident = identity_germ(f.trunc)
    return certify(f, f, ident, ident)


def compose_records(first: ConjugationRecord, second: ConjugationRecord) -> ConjugationRecord:
    """f →(Φ) g →(Ψ) h gives f →(Ψ∘Φ) h."""
    change = second.change.compose(first.change)
    inverse = None
    if first.inverse is not None and second.inverse is not None:
        inverse = first.inverse.compose(second.inverse)
    # a solved series survives composition with steps that carry none
    solved = [r.series for r in (first, second) if r.series is not None]
    return certify(
        first.source,
        second.target,
        change,
        inverse,
        first.notes + second.notes,
        series=solved[0] if len(solved) == 1 else None,
    )


def conjugate(f: Germ, change: Germ, inverse: Germ) -> Germ:
    """Φ ∘ f ∘ Φ⁻¹."""
    g = change.compose(f.compose(inverse))
    return Germ(g.f1, g.f2, provenance=f"conjugate of {f.provenance}")


def invert_change(change: Germ) -> Germ:
    """Compositional inverse of a change with invertible linear part, degree by degree."""
    n = change.trunc
    l_inv = invert_matrix(change.linear_part())
    inverse = linear_germ(l_inv, n)
    for degree in range(2, n + 1):
        composed = change.compose(inverse, order=degree)
        r1 = composed.f1.homogeneous_part(degree)
        r2 = composed.f2.homogeneous_part(degree)
        if r1.is_zero() and r2.is_zero():
            continue
        (a, b), (c, d) = l_inv
        inverse = Germ(
            inverse.f1 - (r1 * a + r2 * b),
            inverse.f2 - (r1 * c + r2 * d),
        )
    return Germ(inverse.f1, inverse.f2, provenance="inverse")


def _scaling_change(nu: Scalar, mu: Scalar, trunc: int) -> tuple[Germ, Germ]:
    matrix: Matrix = ((nu, ZERO), (ZERO, mu))
    return linear_germ(matrix, trunc), linear_germ(invert_matrix(matrix), trunc)


# ── Linear part and invariant curves ────────────────────────────────────


def _kernel_vector(m: Matrix) -> tuple[Scalar, Scalar]:
    (p, q), (r, s) = m
    if p or q:
        return -q, p
    if r or s:
        return -s, r
    return ONE, ZERO


def diagonalize(f: Germ) -> tuple[Germ, ConjugationRecord]:
    """Conjugate by a linear map so that df₀ = diag(λ, 0)."""
    (a, b), (c, d) = f.linear_part()
    lam = f.trace()
    if not b and not c and not d:
        return f, identity_record(f)
    v_lam = _kernel_vector(((a - lam, b), (c, d - lam)))
    v_zero = _kernel_vector(((a, b), (c, d)))
    basis: Matrix = ((v_lam[0], v_zero[0]), (v_lam[1], v_zero[1]))
    change = linear_germ(invert_matrix(basis), f.trunc)
    inverse = linear_germ(basis, f.trunc)
    g = conjugate(f, change, inverse)
    return g, certify(f, g, change, inverse, ["linear part diagonalized"])


def _require_diagonal(f: Germ) -> Scalar:
    (a, b), (c, d) = f.linear_part()
    if b or c or d or not a:
        raise PreconditionError("invariant curves are solved for df0 = diag(λ, 0), λ ≠ 0")
    return a


def _swap(phi: BiSeries) -> BiSeries:
    return BiSeries({(j, i): c for (i, j), c in phi.terms.items()}, phi.trunc)


@dataclass
class InvariantCurve:
    series: UniSeries
    residual_order: int

    def to_dict(self) -> dict:
        return {"series": str(self.series), "residual_order": self.residual_order}


def _first_nonzero(residual: UniSeries) -> int:
    order = residual.order()
    return residual.trunc + 1 if order is INFINITY else order


def _unstable_residual(f: Germ, theta: UniSeries) -> UniSeries:
    return f.f2.eval_along_curve(theta) - theta.compose(f.f1.eval_along_curve(theta))


def _stable_residual(f: Germ, eta: UniSeries) -> UniSeries:
    f1s, f2s = _swap(f.f1), _swap(f.f2)
    return f1s.eval_along_curve(eta) - eta.compose(f2s.eval_along_curve(eta))


def solve_unstable_curve(f: Germ) -> InvariantCurve:
    """θ with {w = θ(z)} invariant: θ(f1(z, θ)) = f2(z, θ); pivot λⁿ."""
    lam = _require_diagonal(f)
    n_max = f.trunc
    theta = UniSeries({}, n_max)
    for n in range(1, n_max + 1):
        r_n = _unstable_residual(f, theta).coefficient(n)
        if r_n:
            theta = theta + UniSeries({n: r_n / lam ** n}, n_max)
    logger.debug("unstable curve solved to order %d", n_max)
    return InvariantCurve(theta, _first_nonzero(_unstable_residual(f, theta)))


def solve_stable_curve(f: Germ) -> InvariantCurve:
    """η with {z = η(w)} invariant: η(f2(η, w)) = f1(η, w); pivot λ."""
    lam = _require_diagonal(f)
    n_max = f.trunc
    eta = UniSeries({}, n_max)
    for n in range(1, n_max + 1):
        r_n = _stable_residual(f, eta).coefficient(n)
        if r_n:
            eta = eta + UniSeries({n: -r_n / lam}, n_max)
    logger.debug("stable curve solved to order %d", n_max)
    return InvariantCurve(eta, _first_nonzero(_stable_residual(f, eta)))


def _require_semisuper(f: Germ) -> Scalar:
    germ_type = classify(f)
    if germ_type.kind != GermKind.SEMI_SUPER:
        raise PreconditionError(f"expected a semi-superattracting germ, got {germ_type.kind.value}")
    return germ_type.lam


def invariant_curves(f: Germ) -> tuple[InvariantCurve, InvariantCurve]:
    """Unstable then stable curve, in coordinates where df₀ = diag(λ, 0)."""
    _require_semisuper(f)
    g, _ = diagonalize(f)
    unstable = solve_unstable_curve(g)
    theta = unstable.series
    n = g.trunc
    if not theta.is_zero():
        z, w = BiSeries.z(n), BiSeries.w(n)
        straighten = Germ(z, w - theta.to_bi("z"))
        g = conjugate(g, straighten, Germ(z, w + theta.to_bi("z")))
    return unstable, solve_stable_curve(g)


def prepare(f: Germ) -> tuple[Germ, ConjugationRecord]:
    """Conjugate a semi-superattracting germ to (λz(1+f1), w·f2)."""
    _require_semisuper(f)
    g, linear = diagonalize(f)
    n = g.trunc
    z, w = BiSeries.z(n), BiSeries.w(n)
    change, inverse = linear.change, linear.inverse

    theta = solve_unstable_curve(g).series
    if not theta.is_zero():
        t = theta.to_bi("z")
        phi1, inv1 = Germ(z, w - t), Germ(z, w + t)
        g = conjugate(g, phi1, inv1)
        change, inverse = phi1.compose(change), inverse.compose(inv1)

    eta = solve_stable_curve(g).series
    if not eta.is_zero():
        e = eta.to_bi("w")
        phi2, inv2 = Germ(z - e, w), Germ(z + e, w)
        g = conjugate(g, phi2, inv2)
        change, inverse = phi2.compose(change), inverse.compose(inv2)

    if not g.f1.divisible_by("z") or not g.f2.divisible_by("w"):
        raise InvariantViolated("prepared germ does not leave both axes invariant")
    g = Germ(g.f1, g.f2, provenance=f"prepared {f.provenance}")
    record = certify(f, g, change, inverse, ["axes straightened to the invariant curves"])
    logger.info("prepared germ, residual order %d", record.residual_order)
    return g, record


# ── One-dimensional normal form ─────────────────────────────────────────


class OneDKind(str, Enum):
    SUPERATTRACTING = "superattracting"
    LINEARIZABLE = "linearizable"
    PARABOLIC = "parabolic"


@dataclass
class OneDClass:
    kind: OneDKind
    lam: Scalar
    normal_form: UniSeries
    change: UniSeries | None
    record: ConjugationRecord | None
    p: int | None = None
    r: int | None = None
    s: int | None = None
    beta: Scalar | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "lambda": str(self.lam),
            "p": self.p,
            "r": self.r,
            "s": self.s,
            "beta": None if self.beta is None else str(self.beta),
            "normal_form": str(self.normal_form),
            "notes": list(self.notes),
        }


def _one_d_record(h: UniSeries, target: UniSeries, change: UniSeries) -> ConjugationRecord:
    n = min(h.trunc, target.trunc, change.trunc)
    zero = BiSeries({}, n)
    w = BiSeries.w(n)
    return certify(
        Germ(h.to_bi("z"), zero),
        Germ(target.to_bi("z"), zero),
        Germ(change.to_bi("z"), w),
        None,
    )


def _boettcher(h: UniSeries) -> OneDClass:
    p = h.order()
    a = h.coefficient(p)
    n = h.trunc
    target = UniSeries({p: ONE}, n)
    try:
        c = nth_root(a, p - 1)
    except ScalingObstruction as exc:
        return OneDClass(OneDKind.SUPERATTRACTING, ZERO, h, None, None, p=p, notes=[str(exc)])
    order = n - p + 1
    psi = UniSeries({1: c}, n)
    pivot = c ** (p - 1) * p
    for k in range(2, order + 1):
        residual = psi.compose(h) - psi ** p
        r_k = residual.coefficient(p + k - 1)
        if r_k:
            psi = psi + UniSeries({k: r_k / pivot}, order)
    psi = psi.truncate(order)
    record = _one_d_record(h.truncate(order), target.truncate(order), psi)
    return OneDClass(OneDKind.SUPERATTRACTING, ZERO, target, psi, record, p=p)


def _conjugate_1d(g: UniSeries, psi: UniSeries) -> UniSeries:
    return psi.compose(g.compose(psi.reversion()))


def normal_form_1d(h: UniSeries) -> OneDClass:
    """Formal class of z ↦ h(z) with the change reaching it."""
    if h.is_zero():
        raise PreconditionError("the zero map has no formal class")
    if h.coefficient(0):
        raise PreconditionError("map must fix the origin")
    lam = h.coefficient(1)
    if not lam:
        return _boettcher(h)

    n = h.trunc
    z = UniSeries.variable(n)
    r = root_of_unity_order(lam) if modulus_compare(lam) == Modulus.EQUAL else None
    g, total = h, z
    s = None
    beta = None
    lead = None
    notes: list[str] = []

    for k in range(1, n):
        a = g.coefficient(k + 1)
        resonant = r is not None and k % r == 0
        if s is not None and k == 2 * s:
            beta = a / lam
            continue
        if not a:
            continue
        if not resonant:
            step = z + UniSeries({k + 1: -a / (lam * (lam ** k - 1))}, n)
        elif s is None:
            s = k
            try:
                mu = nth_root(a / lam, s)
            except ScalingObstruction as exc:
                notes.append(f"z^{s + 1} coefficient left unnormalized: {exc}")
                lead = a
                continue
            step = UniSeries({1: mu}, n)
        else:
            j = k - s
            b = g.coefficient(s + 1)
            step = z + UniSeries({j + 1: -a / (b * (j - s))}, n)
        g = _conjugate_1d(g, step)
        total = step.compose(total)
        if s == k:
            lead = g.coefficient(s + 1)

    record = _one_d_record(h, g, total)
    if r is None:
        return OneDClass(OneDKind.LINEARIZABLE, lam, g, total, record, notes=notes)
    if s is None:
        notes.append(f"no resonant term survives up to order {n}")
        return OneDClass(OneDKind.LINEARIZABLE, lam, g, total, record, r=r, notes=notes)
    if beta is None:
        notes.append(f"beta lies above truncation {n}")
    if lead is not None and lead != lam:
        notes.append(f"leading resonant coefficient is {lead}")
    logger.debug("parabolic first action: r=%d s=%d beta=%s", r, s, beta)
    return OneDClass(OneDKind.PARABOLIC, lam, g, total, record, r=r, s=s, beta=beta, notes=notes)


# ── First action ────────────────────────────────────────────────────────


@dataclass
class FirstAction:
    germ: Germ
    record: ConjugationRecord
    phi: BiSeries
    one_d: OneDClass


def _require_prepared(f: Germ) -> Scalar:
    lam = f.trace()
    factor = f.f1.monomial_factor() if not f.f1.is_zero() else None
    if (
        factor is None
        or factor[:2] != (1, 0)
        or not f.f2.divisible_by("w")
        or f.det()
        or not lam
    ):
        raise PreconditionError("germ is not in prepared form (λz(1+f1), w·f2)")
    return lam


def first_action_conjugacy(f: Germ) -> FirstAction:
    """Φ = (z(1+φ), w) with Φ∘f∘Φ⁻¹ = (h(z), g(z, w))."""
    lam = _require_prepared(f)
    n = f.trunc
    one_d = normal_form_1d(f.f1.restrict_z())
    h = one_d.normal_form
    z, w = BiSeries.z(n), BiSeries.w(n)
    h_bi = h.to_bi("z")

    # row m = 0 from the one-dimensional change ψ0 = z(1 + φ(z, 0))
    phi = one_d.change.to_bi("z").shift(-1, 0) - 1
    for degree in range(1, n):
        one_plus = phi + 1
        # φ∘f is only needed to degree D since f1 has no constant term
        image = one_plus.compose(f.f1, f.f2, order=degree).with_truncation(degree + 1)
        lhs = f.f1.multiply(image, degree + 1)
        rhs = h_bi.compose(one_plus.shift(1, 0), w, order=degree + 1)
        error = lhs - rhs
        updates = {}
        for m in range(1, degree + 1):
            e = error.coefficient(degree - m + 1, m)
            if e:
                updates[(degree - m, m)] = e / lam
        if updates:
            phi = phi + BiSeries(updates, phi.trunc)
    change = Germ((phi + 1).shift(1, 0), w, provenance="first action change")
    inverse = invert_change(change)
    g = conjugate(f, change, inverse)
    g = Germ(h_bi, g.f2, provenance=f"first action form of {f.provenance}")
    record = certify(f, g, change, inverse, [f"first action: {one_d.kind.value}"], series=phi)
    logger.info("first action conjugacy residual order %d", record.residual_order)
    return FirstAction(g, record, phi, one_d)


# ── Second conjugacy and normal forms ───────────────────────────────────


class NormalFormCase(str, Enum):
    CASE_I = "I"
    CASE_II = "II"
    CASE_III = "III"
    ATTRACTING_CLASS2 = "attracting-class-2"


@dataclass
class NormalForm:
    case: NormalFormCase
    lam: Scalar
    c: int | None = None
    d: int | None = None
    l: int | None = None
    epsilon: Scalar | UniSeries | None = None
    r: int | None = None
    s: int | None = None
    beta: Scalar | None = None
    q: int | None = None
    polynomial: UniSeries | None = None
    kappa: Scalar = ONE
    germ: Germ | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "case": self.case.value,
            "lambda": str(self.lam),
            "c": self.c,
            "d": self.d,
            "l": self.l,
            "epsilon": None if self.epsilon is None else str(self.epsilon),
            "r": self.r,
            "s": self.s,
            "beta": None if self.beta is None else str(self.beta),
            "q": self.q,
            "P": None if self.polynomial is None else str(self.polynomial),
            "kappa": str(self.kappa),
            "form": None if self.germ is None else str(self.germ),
            "notes": list(self.notes),
        }


def resonances(lam: Scalar, d: int, n_max: int) -> list[int]:
    return [n for n in range(1, n_max + 1) if power_equals(lam, n, d)]


@dataclass
class SecondConjugacy:
    normal_form: NormalForm
    record: ConjugationRecord
    psi: BiSeries


def _split_second(f: Germ) -> tuple[int, int, Scalar, BiSeries]:
    if any(j for _, j in f.f1.terms):
        raise PreconditionError("first component must depend on z only")
    if f.f2.is_zero():
        raise PreconditionError("second component vanishes to truncation")
    factor = f.f2.monomial_factor()
    if factor is None:
        raise PreconditionError("second component is not z^c w^d times a unit")
    c, d, unit = factor
    if d < 1 or c + d < 2:
        raise PreconditionError(f"need d ≥ 1 and c + d ≥ 2, got c={c}, d={d}")
    kappa = unit.constant_term()
    return c, d, kappa, unit / kappa


def second_conjugacy(f: Germ) -> SecondConjugacy:
    """Ψ = (z, w(1+ψ)) reaching (h, κ z^c w^d (1 + ε(z))), then exact scaling."""
    c, d, kappa, one_plus_g = _split_second(f)
    h = f.f1
    lam = h.coefficient(1, 0)
    n = f.trunc
    n_eff = n - c - d
    psi = BiSeries({}, n_eff)
    eps: dict[int, Scalar] = {}
    resonant = set(resonances(lam, d, n_eff))
    for degree in range(1, n_eff + 1):
        epsilon = BiSeries({(k, 0): v for k, v in eps.items()}, n_eff)
        lhs = one_plus_g.multiply((psi + 1).compose(h, f.f2, order=degree), degree)
        rhs = ((psi + 1) ** d).multiply(epsilon + 1, degree)
        residual = lhs - rhs
        updates = {}
        for m in range(0, degree + 1):
            k = degree - m
            r0 = residual.coefficient(k, m)
            if not r0:
                continue
            if m >= 1:
                updates[(k, m)] = r0 / d
            elif k in resonant:
                eps[k] = r0
            else:
                updates[(k, 0)] = r0 / (d - lam ** k)
        if updates:
            psi = psi + BiSeries(updates, n_eff)

    z, w = BiSeries.z(n), BiSeries.w(n)
    epsilon = UniSeries(eps, n_eff)
    change = Germ(z, (psi + 1).shift(0, 1), provenance="second change")
    inverse = invert_change(change)
    target = Germ(h, (epsilon.to_bi("z") + 1).scale(kappa).shift(c, d))
    record = certify(f, target, change, inverse, series=psi)

    nf = _classify_normal_form(lam, c, d, kappa, epsilon, h)
    record, nf = _normalize(record, nf)
    logger.info("normal form case %s with residual order %d", nf.case.value, record.residual_order)
    return SecondConjugacy(nf, record, psi)


def _classify_normal_form(
    lam: Scalar, c: int, d: int, kappa: Scalar, epsilon: UniSeries, h: BiSeries
) -> NormalForm:
    disk = modulus_compare(lam)
    order = root_of_unity_order(lam) if disk == Modulus.EQUAL else None
    if disk == Modulus.LESS or (disk == Modulus.EQUAL and order is None):
        return NormalForm(NormalFormCase.CASE_I, lam, c=c, d=d, epsilon=ZERO, kappa=kappa)
    if disk == Modulus.GREATER:
        l = next(iter(resonances(lam, d, epsilon.trunc)), None)
        value = epsilon.coefficient(l) if l is not None else ZERO
        return NormalForm(NormalFormCase.CASE_II, lam, c=c, d=d, l=l, epsilon=value, kappa=kappa)
    one_d = normal_form_1d(h.restrict_z())
    nf = NormalForm(
        NormalFormCase.CASE_III, lam, c=c, d=d, epsilon=epsilon, r=order,
        s=one_d.s, beta=one_d.beta, kappa=kappa, notes=list(one_d.notes),
    )
    return nf


def _normalize(record: ConjugationRecord, nf: NormalForm) -> tuple[ConjugationRecord, NormalForm]:
    """Exact diagonal scaling: κ → 1 and, in case II, ε_l → 1."""
    g = record.target
    n = g.trunc
    nu, mu = ONE, ONE
    kappa = nf.kappa
    h_linear = all(i == 1 for i, _ in g.f1.terms)
    try:
        if nf.case == NormalFormCase.CASE_II and nf.l is not None and nf.epsilon:
            nu = nth_root(nf.epsilon, nf.l)
            kappa = kappa / nu ** nf.c
        if kappa != ONE:
            if nf.d >= 2:
                mu = nth_root(kappa, nf.d - 1)
            elif h_linear and nf.c:
                nu = nu * nth_root(kappa, nf.c)
            else:
                raise ScalingObstruction("z-scaling would disturb the first action")
    except ScalingObstruction as exc:
        nf.notes.append(f"scaling obstruction, coefficients left unnormalized: {exc}")
        nf.germ = g
        return record, nf
    if nu == ONE and mu == ONE:
        nf.germ = g
        return record, nf
    change, inverse = _scaling_change(nu, mu, n)
    scaled = conjugate(g, change, inverse)
    step = certify(g, scaled, change, inverse, ["diagonal scaling"])
    record = compose_records(record, step)
    nf.kappa = ONE
    if nf.case == NormalFormCase.CASE_II and nf.l is not None and nf.epsilon:
        nf.epsilon = ONE
    if nf.case == NormalFormCase.CASE_III and isinstance(nf.epsilon, UniSeries):
        nf.epsilon = UniSeries(
            {k: v / nu ** k for k, v in nf.epsilon.terms.items()}, nf.epsilon.trunc
        )
    nf.germ = scaled
    return record, nf


def attracting_class2_form(f: Germ) -> tuple[NormalForm, ConjugationRecord]:
    """(λz, κ z^q w + P(z)), |λ| < 1, P polynomial: reduce P to degree ≤ q."""
    lam = f.f1.coefficient(1, 0)
    if set(f.f1.terms) != {(1, 0)} or modulus_compare(lam) != Modulus.LESS:
        raise PreconditionError("expected first component λz with |λ| < 1")
    mixed = [(i, j) for i, j in f.f2.terms if j != 0]
    if len(mixed) != 1 or mixed[0][1] != 1 or mixed[0][0] < 1:
        raise PreconditionError("expected second component κ z^q w + P(z)")
    q = mixed[0][0]
    kappa = f.f2.coefficient(q, 1)
    n = f.trunc
    p = {i: c for (i, j), c in f.f2.terms.items() if j == 0}

    shift: dict[int, Scalar] = {}
    for k in range(n - q, 0, -1):
        value = (p.get(k + q, ZERO) + lam ** (k + q) * shift.get(k + q, ZERO)) / kappa
        if value:
            shift[k] = value
    reduced = {i: p.get(i, ZERO) + lam ** i * shift.get(i, ZERO) for i in range(1, q + 1)}
    z, w = BiSeries.z(n), BiSeries.w(n)
    bump = UniSeries(shift, n).to_bi("z")
    change, inverse = Germ(z, w + bump), Germ(z, w - bump)
    g = conjugate(f, change, inverse)
    record = certify(f, g, change, inverse, ["exact for polynomial second component"])
    nf = NormalForm(
        NormalFormCase.ATTRACTING_CLASS2, lam, q=q,
        polynomial=UniSeries(reduced, q), kappa=kappa, germ=g,
    )
    if kappa != ONE:
        try:
            nu = nth_root(kappa, q)
        except ScalingObstruction as exc:
            nf.notes.append(f"scaling obstruction, kappa left unnormalized: {exc}")
            return nf, record
        scale, scale_inv = _scaling_change(nu, ONE, n)
        scaled = conjugate(g, scale, scale_inv)
        record = compose_records(record, certify(g, scaled, scale, scale_inv, ["diagonal scaling"]))
        nf.kappa = ONE
        nf.polynomial = UniSeries(
            {i: c / nu ** i for i, c in reduced.items()}, q
        )
        nf.germ = scaled
    return nf, record


def _is_attracting_class2(f: Germ) -> bool:
    if set(f.f1.terms) != {(1, 0)}:
        return False
    if modulus_compare(f.f1.coefficient(1, 0)) != Modulus.LESS:
        return False
    mixed = [(i, j) for i, j in f.f2.terms if j != 0]
    pure = [i for i, j in f.f2.terms if j == 0]
    return len(mixed) == 1 and mixed[0][1] == 1 and mixed[0][0] >= 1 and bool(pure)


@dataclass
class NormalFormResult:
    normal_form: NormalForm
    record: ConjugationRecord
    rigidification: Rigidification | None = None
    first_action: FirstAction | None = None
    second: SecondConjugacy | None = None
    notes: list[str] = field(default_factory=list)


def normal_form(f: Germ, max_steps: int = 12, min_retained_order: int = 8) -> NormalFormResult:
    """Prepare, rigidify if needed, then the first action and second conjugacy."""
    _require_semisuper(f)
    if _is_attracting_class2(f):
        nf, record = attracting_class2_form(f)
        return NormalFormResult(nf, record)

    rig = rigidify_semisuper(f, max_steps, min_retained_order)
    notes = []
    if rig.modification.steps:
        notes.append(
            f"normal form of the rigid lift after {len(rig.modification.steps)} blow-ups"
        )
    first = first_action_conjugacy(rig.germ)
    second = second_conjugacy(first.germ)
    record = compose_records(first.record, second.record)
    if not rig.modification.steps:
        record = compose_records(rig.record, record)
    return NormalFormResult(second.normal_form, record, rig, first, second, notes)


# ── Divergence evidence ─────────────────────────────────────────────────


class GrowthVerdict(str, Enum):
    BOUNDED = "bounded"
    GROWTH_DETECTED = "growth-detected"


@dataclass
class GrowthProfile:
    index: int
    norms: list[tuple[int, Fraction]]
    verdict: GrowthVerdict
    growth_factor_squared: Fraction | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "norms_squared": [[k, str(v)] for k, v in self.norms],
            "verdict": self.verdict.value,
            "growth_factor_squared": None
            if self.growth_factor_squared is None
            else str(self.growth_factor_squared),
        }


@dataclass
class DivergenceReport:
    rows: list[GrowthProfile]
    columns: list[GrowthProfile]

    @property
    def formal_only(self) -> bool:
        return any(p.verdict == GrowthVerdict.GROWTH_DETECTED for p in self.rows + self.columns)

    def row(self, m: int) -> GrowthProfile:
        return next(p for p in self.rows if p.index == m)

    def to_dict(self) -> dict:
        return {
            "rows": [p.to_dict() for p in self.rows],
            "columns": [p.to_dict() for p in self.columns],
            "formal_only": self.formal_only,
        }


def _norm_squared(c: Scalar) -> Fraction:
    if isinstance(c, GaussianRational):
        return c.norm()
    product = c * c.conjugate()
    if isinstance(product, GaussianRational) and product.is_rational():
        return product.re
    raise Unsupported(f"|{c}|^2 is not rational; growth cannot be compared exactly")


def _profile(index: int, entries: dict[int, Scalar]) -> GrowthProfile:
    norms = [(k, _norm_squared(v)) for k, v in sorted(entries.items()) if k > 0]
    # longest run of consecutive exponents at the top of the computed range
    run: list[tuple[int, Fraction]] = []
    for k, v in norms:
        if run and k != run[-1][0] + 1:
            run = []
        run.append((k, v))
    ratios = [b[1] / a[1] for a, b in zip(run, run[1:])]
    if len(ratios) >= 3 and all(x < y for x, y in zip(ratios[-3:], ratios[-2:])):
        seconds = [y / x for x, y in zip(ratios, ratios[1:])]
        fit = seconds[-1] if len(set(seconds[-2:])) == 1 else None
        return GrowthProfile(index, norms, GrowthVerdict.GROWTH_DETECTED, fit)
    return GrowthProfile(index, norms, GrowthVerdict.BOUNDED)


def _conjugating_series(record: ConjugationRecord) -> BiSeries:
    if record.series is not None:
        return record.series
    change = record.change
    n = change.trunc
    moved = [
        component
        for component, identity in ((change.f1, BiSeries.z(n)), (change.f2, BiSeries.w(n)))
        if component != identity
    ]
    if len(moved) != 1:
        raise PreconditionError("the change moves both coordinates; pass the coefficient series itself")
    return moved[0]


def divergence_report(coeffs: BiSeries | ConjugationRecord) -> DivergenceReport:
    """Per-row and per-column growth of |a_{n,m}| with a superexponential verdict.

    A record is read through the series it was solved from, or else through the
    one component of its change that differs from the identity.
    """
    if isinstance(coeffs, ConjugationRecord):
        coeffs = _conjugating_series(coeffs)
    rows: dict[int, dict[int, Scalar]] = {}
    cols: dict[int, dict[int, Scalar]] = {}
    for (i, j), c in coeffs.terms.items():
        rows.setdefault(j, {})[i] = c
        cols.setdefault(i, {})[j] = c
    return DivergenceReport(
        rows=[_profile(m, entries) for m, entries in sorted(rows.items())],
        columns=[_profile(k, entries) for k, entries in sorted(cols.items())],
    )
