"""Numpy implementations of the maxent inner loops.

These mirror ``_kernels.pyx`` exactly in contract; :mod:`surfgen.kernels`
picks the compiled version when it is importable.

Layout shared by both implementations (CSR over grouped histories)::

    hist_ptr[h] : hist_ptr[h+1]   slice of pair_out / pair_fid for history h
    ev_ptr[h]   : ev_ptr[h+1]     slice of ev_out / ev_count observed with h
    hist_weight[h]                total event count of history h
"""

import numpy as np


def log_softmax_scores(pair_out, pair_fid, log_w, n_out):
    """Log-probabilities over all outcomes for one history.

    ``pair_out[k]`` is the outcome index of the k-th active feature and
    ``pair_fid[k]`` its feature id.
    """
    scores = np.bincount(pair_out, weights=log_w[pair_fid], minlength=n_out)
    top = scores.max()
    return scores - (top + np.log(np.exp(scores - top).sum()))


def iis_expectations(hist_ptr, pair_out, pair_fid, hist_weight,
                     ev_ptr, ev_out, ev_count, log_w, n_out, max_fsharp, lo, hi):
    """Expected feature counts split by feature-sum, plus the log-likelihood.

    Returns ``(expected, loglik)`` where ``expected[j, m]`` is the model mass
    on (history, outcome) pairs in histories ``lo..hi-1`` where feature j
    fires and exactly m features fire in total.
    """
    n_feat = log_w.shape[0]
    expected = np.zeros((n_feat, max_fsharp + 1))
    nh = hi - lo
    if nh <= 0:
        return expected, 0.0
    p0, p1 = hist_ptr[lo], hist_ptr[hi]
    hid = np.repeat(np.arange(nh), np.diff(hist_ptr[lo:hi + 1]))
    out = pair_out[p0:p1]
    fid = pair_fid[p0:p1]

    scores = np.zeros((nh, n_out))
    np.add.at(scores, (hid, out), log_w[fid])
    fsharp = np.zeros((nh, n_out), dtype=np.int64)
    np.add.at(fsharp, (hid, out), 1)

    top = scores.max(axis=1, keepdims=True)
    log_z = top[:, 0] + np.log(np.exp(scores - top).sum(axis=1))
    probs = np.exp(scores - log_z[:, None])

    mass = hist_weight[lo:hi][hid] * probs[hid, out]
    np.add.at(expected, (fid, fsharp[hid, out]), mass)

    e0, e1 = ev_ptr[lo], ev_ptr[hi]
    ev_hid = np.repeat(np.arange(nh), np.diff(ev_ptr[lo:hi + 1]))
    eo = ev_out[e0:e1]
    loglik = float(np.sum(ev_count[e0:e1] * (scores[ev_hid, eo] - log_z[ev_hid])))
    return expected, loglik
