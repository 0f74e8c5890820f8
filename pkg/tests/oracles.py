"""Independent reference implementations used only by the tests."""
import itertools
import math

import numpy as np


def law_of_cosines_angles(p0, p1, p2):
    a = math.dist(p1, p2)
    b = math.dist(p0, p2)
    c = math.dist(p0, p1)

    def ang(opp, s1, s2):
        return math.degrees(math.acos(max(-1.0, min(1.0, (s1 * s1 + s2 * s2 - opp * opp) / (2 * s1 * s2)))))

    return ang(a, b, c), ang(b, a, c), ang(c, a, b)


def brute_force_keygraph_ids(points, min_angle=5.0, min_gap=5.0, min_dist=10.0):
    """Sorted id triples of thick scalene triangles by exhaustive triple scan."""
    pts = [tuple(map(float, p)) for p in points]
    out = set()
    for i, j, k in itertools.combinations(range(len(pts)), 3):
        p = pts[i], pts[j], pts[k]
        if min(math.dist(p[0], p[1]), math.dist(p[1], p[2]), math.dist(p[0], p[2])) < min_dist:
            continue
        area = abs((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0])) / 2
        if area <= 1e-9:
            continue
        angles = sorted(law_of_cosines_angles(*p))
        if angles[0] < min_angle or angles[1] - angles[0] < min_gap or angles[2] - angles[1] < min_gap:
            continue
        out.add((i, j, k))
    return out


def in_circumcircle(a, b, c, d):
    """Positive when d lies strictly inside the circumcircle of a, b, c (any orientation)."""
    m = np.array(
        [
            [a[0] - d[0], a[1] - d[1], (a[0] - d[0]) ** 2 + (a[1] - d[1]) ** 2],
            [b[0] - d[0], b[1] - d[1], (b[0] - d[0]) ** 2 + (b[1] - d[1]) ** 2],
            [c[0] - d[0], c[1] - d[1], (c[0] - d[0]) ** 2 + (c[1] - d[1]) ** 2],
        ]
    )
    orient = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return np.linalg.det(m) * np.sign(orient)


def empty_circumcircle_violations(points, triangles, margin=1e-9):
    """Triangles whose circumcircle strictly contains another point."""
    pts = np.asarray(points, dtype=float)
    bad = []
    for tri in triangles:
        a, b, c = pts[list(tri)]
        centre_r = _circumcircle(a, b, c)
        if centre_r is None:
            bad.append(tuple(tri))
            continue
        centre, r = centre_r
        d = np.hypot(*(pts - centre).T)
        d[list(tri)] = np.inf
        if np.any(d < r * (1 - margin) - margin):
            bad.append(tuple(tri))
    return bad


def _circumcircle(a, b, c):
    d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    if abs(d) < 1e-12:
        return None
    ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1]) + (c @ c) * (a[1] - b[1])) / d
    uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0]) + (c @ c) * (b[0] - a[0])) / d
    centre = np.array([ux, uy])
    return centre, float(np.hypot(*(a - centre)))


def convex_hull_area(points):
    """Andrew's monotone chain followed by the shoelace formula."""
    pts = sorted(map(tuple, np.asarray(points, dtype=float).tolist()))

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return 0.5 * abs(sum(x0 * y1 - x1 * y0 for (x0, y0), (x1, y1) in zip(hull, hull[1:] + hull[:1])))


def triangle_area(a, b, c):
    return abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) / 2.0


def random_similarity(rng):
    return (
        rng.uniform(-300, 300),
        rng.uniform(-300, 300),
        float(np.exp(rng.uniform(np.log(0.2), np.log(5)))),
        rng.uniform(0, 360),
    )


def apply_similarity(points, tx, ty, scale, rotation, mirror=False):
    pts = np.asarray(points, dtype=float).copy()
    if mirror:
        pts[:, 0] = -pts[:, 0]
    t = math.radians(rotation)
    c, s = math.cos(t), math.sin(t)
    return np.column_stack([scale * (c * pts[:, 0] - s * pts[:, 1]) + tx, scale * (s * pts[:, 0] + c * pts[:, 1]) + ty])
