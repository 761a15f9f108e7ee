"""Gaussian integration over the psi family and direct log-partition output.

The reference measure has identity covariance with the pairing
``<psibar_k psi_k> = +1`` for every psi mode k; eta-family generators pass
through integration untouched.  Two independent evaluation routes are
provided:

* ``expand``: exponentiate the interaction, integrate monomial by monomial,
  take the logarithm.  Simple and exact, but the intermediate element can
  be exponentially large; only viable for small universes.
* ``eliminate``: integrate out one psi mode at a time directly at the level
  of the exponent.  Writing the exponent as
  ``f = f0 + psibar_k u + v psi_k + psibar_k psi_k w``, one Gaussian mode
  gives ``exp(f0) (1 + u v + w)``, which is folded back into exponent form.
  This keeps everything logarithmic and is the production oracle.

Both routes return a :class:`LogSeries`, the logarithm of the normalized
integral as a polynomial in the surviving eta generators.
"""

from __future__ import annotations

import cmath
from typing import Literal

from .algebra import GrassmannElement, canonicalize, exp_series, log1p_nilpotent
from .coeffsys import CoefficientSystem, system_from_element
from .errors import NormalizationError, ParityError
from .generators import GeneratorIndex, GeneratorUniverse


def integrate_monomial(universe: GeneratorUniverse, mask: int) -> tuple[int, int]:
    """Gaussian integral of one canonical monomial: (eta residual mask, value).

    The psi part survives only when every mode contributes its barred and
    unbarred generator together; the canonical layout then factors it into
    adjacent even pairs, each integrating to +1, so no sign ever appears.
    """
    psi_part, eta_part = universe.split_mask(mask)
    bars = psi_part & universe.psi_bar_mask
    unbars = (psi_part >> 1) & universe.psi_bar_mask
    if bars != unbars:
        return 0, 0
    return eta_part, 1


def integrate_element(universe: GeneratorUniverse, element: GrassmannElement) -> GrassmannElement:
    """Gaussian integral over all psi modes; the result lives on eta bits only."""
    out = GrassmannElement()
    acc = out.terms
    for mask, c in element.terms.items():
        residual, value = integrate_monomial(universe, mask)
        if value == 0:
            continue
        v = acc.get(residual, 0j) + c
        if v == 0:
            acc.pop(residual, None)
        else:
            acc[residual] = v
    return out


def wick_expectation(universe: GeneratorUniverse, ordered: tuple[GeneratorIndex, ...]) -> int:
    """Reference Wick evaluation of an ordered psi-generator product.

    Recursive pairing sum with ``<psibar psi> = +1`` for matching modes and
    the transposition sign tracked explicitly.  Exponential cost; used as
    the independent oracle for :func:`integrate_monomial` in tests.
    """
    n = len(ordered)
    if n % 2:
        return 0
    if n == 0:
        return 1
    first, rest = ordered[0], ordered[1:]
    total = 0
    for j, g in enumerate(rest):
        if g.mode != first.mode or g.bar == first.bar:
            continue
        pair = 1 if first.bar else -1  # <psibar psi> = +1, <psi psibar> = -1
        sign = -1 if j % 2 else 1
        remaining = rest[:j] + rest[j + 1:]
        total += sign * pair * wick_expectation(universe, remaining)
    return total


#: Every LogSeries built in this process, for suite-wide property scans
#: (for example the even-length check over all produced series).
SERIES_LOG: list["LogSeries"] = []


def clear_series_log() -> None:
    SERIES_LOG.clear()


class LogSeries:
    """Logarithm of a normalized Gaussian integral as an eta polynomial."""

    def __init__(self, universe: GeneratorUniverse, element: GrassmannElement):
        psi_bits = universe.psi_block_mask
        if any(m & psi_bits for m in element.terms):
            raise ValueError("log series may only involve eta generators")
        self.universe = universe
        self.element = element
        SERIES_LOG.append(self)

    @property
    def constant(self) -> complex:
        return self.element.constant

    def coefficients(self) -> CoefficientSystem:
        """One kernel entry per canonical monomial, constant included."""
        return system_from_element(self.universe, self.element)

    def odd_masks(self) -> list[int]:
        """Monomials of odd length; an even input must produce none."""
        return [m for m in self.element.terms if m.bit_count() % 2]

    def antisym_eval(self, *gens: GeneratorIndex) -> complex:
        """Coefficient kernel extended antisymmetrically to any slot order."""
        mask, sign = canonicalize(self.universe, gens)
        if sign == 0:
            return 0j
        return sign * self.element.terms.get(mask, 0j)

    def __repr__(self) -> str:
        return f"LogSeries({len(self.element)} terms, constant {self.constant:.6g})"


def _split_mode(f: GrassmannElement, bar_bit: int, unbar_bit: int):
    """Split an even exponent around one psi mode.

    Returns (f0, u, v, w) with ``f = f0 + psibar u + v psi + psibar psi w``
    where psibar/psi are the generators of the given bits.  The pair term
    carries no sign (an adjacent even block); the single-generator terms
    pick up the parity of the bits they move across.
    """
    p = bar_bit.bit_length() - 1
    below = bar_bit - 1
    f0 = GrassmannElement()
    u = GrassmannElement()
    v = GrassmannElement()
    w = GrassmannElement()
    for m, c in f.terms.items():
        has_bar = m & bar_bit
        has_unbar = m & unbar_bit
        if has_bar and has_unbar:
            w.terms[m ^ bar_bit ^ unbar_bit] = c
        elif has_bar:
            sign = -1 if (m & below).bit_count() & 1 else 1
            u.terms[m ^ bar_bit] = sign * c
        elif has_unbar:
            sign = -1 if (m >> (p + 2)).bit_count() & 1 else 1
            v.terms[m ^ unbar_bit] = sign * c
        else:
            f0.terms[m] = c
    return f0, u, v, w


def effective_log_integral(universe: GeneratorUniverse, f: GrassmannElement,
                           floor: float = 0.0) -> GrassmannElement:
    """log of the Gaussian integral of exp(f), eliminating one mode at a time.

    Requires an even exponent.  Each step integrates a single psi mode:
    ``int dmu_k exp(f) = exp(f0) (1 + u v + w)``, and the bracket is folded
    back into the exponent through its logarithm, so the working object
    stays a log-series throughout.
    """
    if not f.is_even():
        raise ParityError("mode elimination needs an even exponent")
    current = f
    for k in range(len(universe.psi_modes)):
        bar_bit, unbar_bit = universe.psi_mode_bits(k)
        f0, u, v, w = _split_mode(current, bar_bit, unbar_bit)
        inner = u * v + w
        s = 1 + inner.constant
        if s == 0:
            raise NormalizationError(f"vanishing normalization at psi mode {k}")
        rest = inner.without_constant().scaled(1 / s)
        current = f0 + log1p_nilpotent(rest, floor=floor) + cmath.log(s)
        if floor > 0.0:
            current = current.pruned(floor)
    return current


def log_direct(universe: GeneratorUniverse, f: GrassmannElement,
               method: Literal["auto", "eliminate", "expand"] = "auto",
               floor: float = 0.0) -> LogSeries:
    """log of the Gaussian integral of exp(f) as a :class:`LogSeries`.

    ``eliminate`` is the scalable route and requires an even exponent;
    ``expand`` exponentiates literally and works on any input small enough
    to hold in memory.  ``auto`` picks elimination for even exponents.
    """
    if method == "auto":
        method = "eliminate" if f.is_even() else "expand"
    if method == "eliminate":
        series = effective_log_integral(universe, f, floor=floor)
    elif method == "expand":
        big = exp_series(f, floor=floor)
        integrated = integrate_element(universe, big)
        s = integrated.constant
        if s == 0:
            raise NormalizationError("vanishing partition function")
        rest = integrated.without_constant().scaled(1 / s)
        series = log1p_nilpotent(rest, floor=floor) + cmath.log(s)
    else:
        raise ValueError(f"unknown method {method!r}")
    if f.is_even():
        odd = [m for m in series.terms if m.bit_count() % 2]
        if odd:
            raise ParityError(f"even exponent produced {len(odd)} odd output terms")
    return LogSeries(universe, series)
