"""Greedy and length-normalized beam decoding over a generic step function.

A step function maps (previous token id, decoder state) to (log-probability
vector, next state); the search owns sequence bookkeeping only.
"""

from __future__ import annotations

import numpy as np

from .errors import TypedescError


def greedy(step, state, bos_id: int, eos_id: int, max_len: int) -> list[int]:
    ids = []
    prev = bos_id
    for _ in range(max_len):
        logp, state = step(prev, state)
        nxt = int(np.argmax(logp))
        if nxt == eos_id:
            break
        ids.append(nxt)
        prev = nxt
    return ids


def beam(step, state, bos_id: int, eos_id: int, max_len: int, width: int) -> list[int]:
    """Prune by cumulative log-probability, pick the final hypothesis by mean."""
    if width < 1:
        raise TypedescError(f"beam width must be >= 1, got {width}")
    # hypothesis: (ids, cumulative logp, state, finished)
    beams = [([], 0.0, state, False)]
    for _ in range(max_len):
        candidates = []
        any_open = False
        for ids, score, st, finished in beams:
            if finished:
                candidates.append((ids, score, st, True))
                continue
            any_open = True
            prev = ids[-1] if ids else bos_id
            logp, nst = step(prev, st)
            top = np.argsort(-logp, kind="stable")[:width]
            for tok in top:
                tok = int(tok)
                if tok == eos_id:
                    candidates.append((ids, score + float(logp[tok]), nst, True))
                else:
                    candidates.append((ids + [tok], score + float(logp[tok]), nst, False))
        if not any_open:
            break
        candidates.sort(key=lambda h: -h[1])  # stable: insertion order breaks ties
        beams = candidates[:width]
    best = max(beams, key=lambda h: h[1] / (len(h[0]) + 1))
    return list(best[0])
