"""Pure numpy box-variance kernels (fallback for the compiled module)."""
import numpy as np

NAME = "python"


def dfa_box_variances(y, s, basis, both_ends):
    """Mean squared residual of each box after projecting out ``basis``.

    Left boxes come first, then (if ``both_ends``) boxes laid from the right
    end, both in order of distance from their starting end.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[0]
    ns = n // s
    if basis.shape[0] != s:
        raise ValueError("basis must have s rows")
    segments = [y[: ns * s]]
    if both_ends:
        # reversed box order so box v starts at n - (v + 1) * s
        segments.append(y[n - ns * s:].reshape(ns, s)[::-1].ravel())
    out = []
    for seg in segments:
        boxes = seg.reshape(ns, s)
        boxes = boxes - boxes[:, s // 2][:, None]
        resid = boxes - (boxes @ basis) @ basis.T
        out.append(np.einsum("ij,ij->i", resid, resid) / s)
    return np.concatenate(out) if out else np.empty(0)


def dma_box_variances(y, s, lag, lead):
    """Mean squared moving-average residual in disjoint boxes of the support."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[0]
    if lag + lead + 1 != s:
        raise ValueError("window must hold exactly s points")
    support = n - lag - lead
    ns = support // s
    if ns <= 0:
        return np.empty(0)
    idx = np.arange(lag, lag + ns * s)
    resid = y[idx] - window_sums(y, s)[idx - lag] / s
    boxes = resid.reshape(ns, s)
    return np.einsum("ij,ij->i", boxes, boxes) / s


def window_sums(y, s):
    """Sums of ``y[j:j+s]`` for every start ``j``.

    Prefix sums restart every ``s`` points, so a window is the tail of one
    block plus the head of the next and rounding stays at the scale of
    ``s |y|`` instead of ``N |y|``.
    """
    n = y.shape[0]
    nb = -(-n // s) + 1
    pad = np.zeros(nb * s)
    pad[:n] = y
    p = np.zeros((nb, s + 1))
    np.cumsum(pad.reshape(nb, s), axis=1, out=p[:, 1:])
    # row k, column r: window starting at k s + r
    sums = (p[:-1, s:] - p[:-1, :s]) + p[1:, :s]
    return sums.ravel()[:n - s + 1]
