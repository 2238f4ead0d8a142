"""Assumption checklist for a problem, evaluated on grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import Band, check_drift_ode, classify_band
from .errors import DomainError, RegimeExhausted
from .problem import grid_for
from .regime_solver import check_bijectivity, check_globality

N_CAP = 64


@dataclass(frozen=True)
class CheckItem:
    name: str
    passed: bool
    detail: str
    informational: bool = False

    def line(self):
        tag = "note" if self.informational else ("pass" if self.passed else "FAIL")
        return f"[{tag}] {self.name}: {self.detail}"


@dataclass(frozen=True)
class CheckReport:
    items: tuple

    @property
    def ok(self):
        return all(i.passed for i in self.items if not i.informational)

    def failed(self):
        return [i for i in self.items if not i.informational and not i.passed]

    def lines(self):
        return [i.line() for i in self.items]

    def to_json(self):
        return {"ok": self.ok, "items": [
            {"name": i.name, "passed": i.passed, "detail": i.detail, "informational": i.informational}
            for i in self.items]}


def _check_sigma(problem):
    c = problem.coeffs
    ts = grid_for(problem)
    window = ts <= problem.check_window
    s1, s2 = c.sigma1.eval(ts), c.sigma2.eval(ts)
    if c.additive_mode:
        bad = ~(s2 > 0.0)
        what = "sigma2(t) > 0"
    else:
        bad = ~(s1 > 0.0) | ~(s2 >= 0.0)
        what = "sigma1(t) > 0 and sigma2(t) >= 0"
    if bad.any():
        i = int(np.argmax(bad))
        return CheckItem("(As-sigma)", False, f"{c.mode} mode needs {what}; fails at t={ts[i]:.6g} "
                         f"(sigma1={s1[i]:.6g}, sigma2={s2[i]:.6g})")
    finite = np.isfinite(s1[window]).all() and np.isfinite(s2[window]).all()
    if not finite:
        return CheckItem("(As-sigma)", False, "sigma1 or sigma2 not finite on the checked window")
    return CheckItem("(As-sigma)", True, f"{c.mode} mode, checked on grid over [0, {problem.check_window:g}] "
                     f"plus geometric points to {problem.horizon:g}; boundedness beyond is not decided")


def _check_drift(problem):
    rep = check_drift_ode(problem.coeffs)
    ok = rep.passed(1e-6)
    return CheckItem("(As-b)", ok, f"drift ODE residual {rep.max_residual:.3e} "
                     f"(worst at t={rep.worst_t:.6g}, x={rep.worst_x:.6g}; tolerance 1e-6)")


def _check_x0(problem):
    lhs, rhs = abs(problem.mu0_bar), 0.5 * problem.var0
    if lhs <= rhs:
        return CheckItem("(As-x0)", True, f"|mu0_bar| = {lhs:.6g} <= sigma0_sq/2 = {rhs:.6g}")
    return CheckItem("(As-x0)", False, f"|mu0_bar| = {lhs:.6g} > sigma0_sq/2 = {rhs:.6g} (margin {rhs - lhs:.3e})")


def _check_levels(problem):
    lv = problem.levels
    issues = lv.validate(N_CAP)
    if issues:
        return CheckItem("(As-I)", False, "; ".join(issues))
    if lv.infinite:
        return CheckItem("(As-I)", True, f"closed-form levels, strictly increasing for n <= {N_CAP}")
    if lv.truncated:
        return CheckItem("(As-I)", True, f"first {lv.count} levels of an increasing sequence")
    return CheckItem("(As-I)", True, f"finite partition of {lv.count} levels; regime {lv.count + 1} owns [y_{lv.count}, 1)")


def _check_reference(problem):
    try:
        rep = problem.transformed_reference.report
    except DomainError as exc:
        return CheckItem("(As-r)", False, str(exc))
    if rep.ok:
        return CheckItem("(As-r)", True, f"rho non-decreasing (min rho' = {rep.min_slope:.3e}) and "
                         f"sup rho = {rep.sup_rho:.6g} <= mu0_bar on [0, {rep.window[1]:g}]")
    return CheckItem("(As-r)", False, "; ".join(rep.violations()))


def regimes_to_check(problem):
    lv = problem.levels
    size = problem.coeffs.alpha_family.size
    if lv.count is None:
        need = N_CAP
    else:
        need = lv.count if lv.truncated else lv.count + 1
    if size is not None:
        return list(range(1, min(need, size) + 1)), need > size, need
    return list(range(1, need + 1)), False, need


def _check_beta(problem):
    ns, short, need = regimes_to_check(problem)
    window = (0.0, problem.check_window)
    if short:
        return CheckItem("(As-beta_n)", False, f"levels need {need} regimes but only "
                         f"{problem.coeffs.alpha_family.size} alphas are given")
    worst = None
    for n in ns:
        try:
            bc = classify_band(problem.coeffs, n, window)
        except RegimeExhausted as exc:
            return CheckItem("(As-beta_n)", False, str(exc))
        if bc.band is not Band.UP_STRICT:
            return CheckItem("(As-beta_n)", False, f"regime {n} is {bc.describe()}")
        if worst is None or bc.margin < worst[1]:
            worst = (n, bc.margin)
    return CheckItem("(As-beta_n)", True, f"regimes 1..{ns[-1]} strictly in the up band on "
                     f"[0, {window[1]:g}] (smallest strict slack {worst[1]:.3e} at n={worst[0]})")


def run_checks(problem):
    """Pass/fail per standing assumption plus globality/bijectivity notes."""
    items = [
        _check_sigma(problem),
        _check_drift(problem),
        _check_x0(problem),
        _check_levels(problem),
        _check_reference(problem),
        _check_beta(problem),
    ]
    glob = check_globality(problem)
    items.append(CheckItem("globality", glob.holds, glob.note, informational=True))
    bij = check_bijectivity(problem)
    items.append(CheckItem("bijectivity", bij.holds, bij.note, informational=True))
    return CheckReport(tuple(items))
