"""Initial data: the ellipse of Test 1, the dumbbell of Test 2, circles, constants."""
from __future__ import annotations

import ast
import logging

import numpy as np

from .errors import EvaluationError, InvalidArgument

log = logging.getLogger(__name__)

ELLIPSE_A = 0.2
ELLIPSE_B = 0.1


def _closest_point_quadrant(px, py, a, b, tol=1e-12, max_iter=100):
    """Closest point on x^2/a^2 + y^2/b^2 = 1 for px, py >= 0 (a >= b).

    Solves F(t) = (a px / (t + a^2))^2 + (b py / (t + b^2))^2 - 1 = 0 for the
    root with t > -b^2.  F is convex and decreasing there, so Newton started
    left of the root increases monotonically to it.
    """
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    cx = np.empty_like(px)
    cy = np.empty_like(py)

    # points on the major axis inside the evolute have a degenerate root.
    # Near the axis the Newton gap t + b^2 cancels catastrophically, while
    # the distance is even in py, so the on-axis answer is accurate to O(py^2).
    axis = (py <= 1e-8 * b) & (px < (a * a - b * b) / a)
    if np.any(axis):
        x = a * a * px[axis] / (a * a - b * b)
        cx[axis] = x
        cy[axis] = b * np.sqrt(np.maximum(0.0, 1.0 - (x / a) ** 2))

    rest = ~axis
    x, y = px[rest], py[rest]
    t = np.maximum(-a * a + a * x, -b * b + b * y)
    failed = np.zeros(x.shape, dtype=bool)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        ta = t[active]
        xa, ya = x[active], y[active]
        ra = a * xa / (ta + a * a)
        rb = b * ya / (ta + b * b)
        F = ra * ra + rb * rb - 1.0
        dF = -2.0 * (ra * ra / (ta + a * a) + rb * rb / (ta + b * b))
        with np.errstate(divide="ignore", invalid="ignore"):
            dt = np.where(dF != 0.0, -F / dF, 0.0)
        t[active] = ta + dt
        done = np.abs(dt) <= tol * np.maximum(1.0, np.abs(ta))
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    else:
        failed = active

    if failed.any():
        log.warning("ellipse distance: Newton failed at %d points, using angular sampling", failed.sum())
        theta = np.linspace(0.0, 0.5 * np.pi, 200001)
        ex, ey = a * np.cos(theta), b * np.sin(theta)
        for i in np.flatnonzero(failed):
            j = np.argmin((ex - x[i]) ** 2 + (ey - y[i]) ** 2)
            t[i] = np.nan
            x_c, y_c = ex[j], ey[j]
            x[i], y[i] = x_c, y_c
    with np.errstate(invalid="ignore"):
        qx = np.where(failed, x, a * a * x / (t + a * a))
        qy = np.where(failed, y, b * b * y / (t + b * b))
    cx[rest] = qx
    cy[rest] = qy
    return cx, cy


def ellipse_signed_distance(x1, x2, a: float = ELLIPSE_A, b: float = ELLIPSE_B):
    """Signed distance to the ellipse, positive outside."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    shape = np.broadcast(x1, x2).shape
    px = np.abs(np.broadcast_to(x1, shape)).ravel()
    py = np.abs(np.broadcast_to(x2, shape)).ravel()
    swap = a < b
    if swap:
        a, b = b, a
        px, py = py, px
    cx, cy = _closest_point_quadrant(px, py, a, b)
    dist = np.hypot(px - cx, py - cy)
    outside = (px / a) ** 2 + (py / b) ** 2 > 1.0
    d = np.where(outside, dist, -dist)
    return d.reshape(shape)


def init_test1(x1, x2, epsilon: float):
    """tanh(d(x) / (sqrt(2) eps)) for the ellipse x1^2/0.04 + x2^2/0.01 = 1."""
    return np.tanh(ellipse_signed_distance(x1, x2) / (np.sqrt(2.0) * epsilon))


def init_circle(x1, x2, epsilon: float, radius: float = 0.25, center=(0.0, 0.0)):
    """Circular interface, -1 inside and +1 outside."""
    r = np.hypot(np.asarray(x1) - center[0], np.asarray(x2) - center[1])
    return np.tanh((r - radius) / (np.sqrt(2.0) * epsilon))


# -- Test 2 -----------------------------------------------------------------


def _sqrt_or_nan(z):
    z = np.asarray(z, dtype=float)
    with np.errstate(invalid="ignore"):
        return np.where(z >= 0.0, np.sqrt(np.where(z >= 0.0, z, 0.0)), np.nan)


def _psi(y2, variant):
    p1 = (-1.0 + _sqrt_or_nan(0.8 * y2 + 0.04)) / 2.0
    p2 = (1.0 - _sqrt_or_nan(1.92 * y2 + 0.2304)) / 2.0
    p3 = (-1.0 + _sqrt_or_nan(-0.8 * y2 + 0.04)) / 2.0
    p4 = (1.0 - _sqrt_or_nan(-1.92 * y2 + 0.2304)) / 2.0
    if variant == "verbatim":
        arg = (1.0 - 0.2451 * y2**2) / 0.0049
        if np.any(arg < 0):
            raise EvaluationError("psi5 evaluated outside its domain", point=y2[arg < 0][0])
        p5 = -np.sqrt(arg)
    else:
        # left branch of the hyperbola |y - (0.5, 0)| - |y + (0.5, 0)| = 0.14,
        # the set of points equidistant from the two discs
        p5 = -np.sqrt(0.0049 * (1.0 + y2**2 / 0.2451))
    return p1, p2, p3, p4, p5


def _le(lhs, rhs, vacuous):
    """lhs <= rhs where NaN operands count as satisfied when ``vacuous``."""
    out = lhs <= rhs
    if vacuous:
        out |= np.isnan(lhs) | np.isnan(rhs)
    return out


def dumbbell_profile(y1, y2, epsilon: float, variant: str = "corrected"):
    """u1(y1, y2): the dumbbell profile before the 3x rescaling.

    Branch conditions are tested in the listed order and the first match
    wins.  ``variant="verbatim"`` uses the formulas exactly as printed; its
    psi5 lies far outside the domain, so some points match no branch and an
    :class:`EvaluationError` is raised.  ``variant="corrected"`` replaces
    psi5 by the hyperbola separating the two discs and treats comparisons
    against an undefined psi1..psi4 (negative square-root argument) as
    satisfied, which makes the table exhaustive.
    """
    if variant not in ("verbatim", "corrected"):
        raise InvalidArgument(f"unknown Test 2 variant {variant!r}")
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    y1, y2 = np.broadcast_arrays(y1, y2)
    vac = variant == "corrected"
    p1, p2, p3, p4, p5 = _psi(y2, variant)
    k = 1.0 / (np.sqrt(2.0) * epsilon)
    mid = (-0.3 <= y1) & (y1 <= 0.14)
    right = y1 > 0.14
    left = y1 < -0.3
    sr = 5.0 / 12.0 * (y1 - 0.5)
    sl = 3.0 / 4.0 * (y1 + 0.5)

    def corner(cx, cy):
        return np.tanh(k * (-np.sqrt((y1 - cx) ** 2 + (y2 - cy) ** 2)))

    big = np.tanh(k * (np.sqrt((y1 - 0.5) ** 2 + y2**2) - 0.39))
    small = np.tanh(k * (np.sqrt((y1 + 0.5) ** 2 + y2**2) - 0.25))
    bar = np.tanh(k * (np.abs(y2) - 0.15))

    branches = [
        (right & (0 <= y2) & (y2 < -sr), corner(0.14, 0.15)),
        (right & (sr < y2) & (y2 < 0), corner(0.14, -0.15)),
        (left & (0 <= y2) & (y2 < sl), corner(-0.3, 0.15)),
        (left & (-sl < y2) & (y2 < 0), corner(-0.3, -0.15)),
        (right & ((y2 >= -sr) | (y2 <= sr)), big),
        (left & ((y2 >= -sl) | (y2 <= -sl)), small),
        (mid & _le(p1, y1, vac) & _le(y1, p2, vac) & _le(p3, y1, vac) & _le(y1, p4, vac), bar),
        (mid & _le(p2, y1, vac) & _le(p5, y1, vac), big),
        (mid & _le(p4, y1, vac) & _le(p5, y1, vac), big),
        (mid & _le(y1, p1, vac) & _le(y1, p5, vac), small),
        (mid & _le(y1, p3, vac) & _le(y1, p5, vac), small),
    ]
    out = np.full(y1.shape, np.nan)
    unset = np.ones(y1.shape, dtype=bool)
    for cond, value in branches:
        take = unset & cond
        out[take] = value[take]
        unset &= ~take
    if unset.any():
        idx = np.unravel_index(np.flatnonzero(unset)[0], y1.shape)
        raise EvaluationError(
            f"no Test 2 branch matches at {(float(y1[idx]), float(y2[idx]))}",
            point=(float(y1[idx]), float(y2[idx])),
        )
    return out


def init_test2(x1, x2, epsilon: float, variant: str = "corrected"):
    """u0(x) = u1(3 x1, 3 x2)."""
    return dumbbell_profile(3.0 * np.asarray(x1, dtype=float), 3.0 * np.asarray(x2, dtype=float), epsilon, variant)


def constant(c: float):
    def f(x1, x2):
        return np.full(np.broadcast(np.asarray(x1), np.asarray(x2)).shape, float(c))

    return f


_EXPR_FUNCS = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "tanh", "sinh", "cosh", "arctan", "arctan2",
                 "abs", "minimum", "maximum", "hypot", "where")
}
_EXPR_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant, ast.Compare,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.Mod, ast.USub, ast.UAdd,
    ast.Lt, ast.LtE, ast.Gt, ast.GtE,
)


def expression(text: str, epsilon: float):
    """Compile an arithmetic expression in x1, x2, eps and numpy functions.

    Only arithmetic, comparisons and the whitelisted functions are accepted;
    attribute access, subscripts and keywords are rejected.
    """
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise InvalidArgument(f"bad initial expression {text!r}: {exc.msg}") from exc
    names = {"x1", "x2", "eps", "pi"} | set(_EXPR_FUNCS)
    for node in ast.walk(tree):
        if not isinstance(node, _EXPR_NODES):
            raise InvalidArgument(f"initial expression may not contain {type(node).__name__}")
        if isinstance(node, ast.Name) and node.id not in names:
            raise InvalidArgument(f"unknown name {node.id!r} in initial expression")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _EXPR_FUNCS):
            raise InvalidArgument("only whitelisted functions may be called")
    code = compile(tree, "<initial>", "eval")

    def f(x1, x2):
        env = dict(_EXPR_FUNCS, x1=np.asarray(x1, dtype=float), x2=np.asarray(x2, dtype=float),
                   eps=epsilon, pi=np.pi)
        val = eval(code, {"__builtins__": {}}, env)  # noqa: S307 - names are whitelisted above
        return np.broadcast_to(np.asarray(val, dtype=float), np.broadcast(env["x1"], env["x2"]).shape)

    return f


def make_initial(name: str, epsilon: float, **params):
    """Vectorized ``f(x1, x2)`` for a named initial condition."""
    if name == "test1":
        return lambda x1, x2: init_test1(x1, x2, epsilon)
    if name == "test2":
        variant = params.get("variant", "corrected")
        return lambda x1, x2: init_test2(x1, x2, epsilon, variant)
    if name == "circle":
        radius = float(params.get("radius", 0.25))
        return lambda x1, x2: init_circle(x1, x2, epsilon, radius)
    if name == "constant":
        return constant(float(params.get("value", 1.0)))
    if name == "expression":
        if "expression" not in params:
            raise InvalidArgument("initial condition 'expression' needs an expression parameter")
        return expression(str(params["expression"]), epsilon)
    raise InvalidArgument(f"unknown initial condition {name!r}")
