"""Reference computations written independently of the package, used to freeze expected values."""

from __future__ import annotations

import math
from fractions import Fraction


def midpoint_game(seller_anchor: int, buyer_anchor: int, threshold: int, max_turns: int = 20):
    """Hand recurrence for two split-the-difference traders.

    Each side opens at its anchor, then counters with the midpoint of the two
    latest proposals, halves rounded against the proposer (seller down, buyer up).
    A side accepts an incoming price within ``threshold`` of its own last one.
    Returns (prices, accepted_price or None).
    """
    prices = [seller_anchor, buyer_anchor]
    own = {"seller": seller_anchor, "buyer": buyer_anchor}
    turn = 2
    while turn < max_turns:
        me = "seller" if turn % 2 == 0 else "buyer"
        incoming = prices[-1]
        if abs(incoming - own[me]) <= threshold:
            return prices, incoming
        mid2 = prices[-1] + prices[-2]  # twice the midpoint
        if mid2 % 2 == 0:
            price = mid2 // 2
        else:
            price = mid2 // 2 if me == "seller" else mid2 // 2 + 1
        prices.append(price)
        own[me] = price
        turn += 1
    return prices, None


def concede_price(anchor: int, reservation: int, gamma: Fraction, k: int) -> int:
    raw = anchor - k * gamma * (anchor - reservation)
    return max(reservation, math.ceil(raw))


def anchor_vs_midpoint(seller_anchor: int, reservation: int, gamma: Fraction, buyer_anchor: int, threshold: int,
                       max_turns: int):
    """Conceding seller against a split-the-difference buyer; returns the accepted price or None."""
    prices: list[int] = []
    seller_k = 0
    buyer_last = None
    for turn in range(max_turns):
        if turn % 2 == 0:
            planned = concede_price(seller_anchor, reservation, gamma, seller_k)
            if prices and prices[-1] >= planned:
                return prices[-1]
            prices.append(planned)
            seller_k += 1
        else:
            if buyer_last is None:
                prices.append(buyer_anchor)
                buyer_last = buyer_anchor
                continue
            if abs(prices[-1] - buyer_last) <= threshold:
                return prices[-1]
            mid2 = prices[-1] + prices[-2]
            buyer_last = mid2 // 2 + (mid2 % 2)
            prices.append(buyer_last)
    return None


def ranks(values):
    """Average ranks by brute force: 1 + #smaller + (#equal - 1) / 2."""
    return [
        1 + sum(w < v for w in values) + (sum(w == v for w in values) - 1) / 2
        for v in values
    ]


def pearson(x, y) -> float:
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
    return cov / math.sqrt(sum((a - mx) ** 2 for a in x) * sum((b - my) ** 2 for b in y))


def spearman_bruteforce(x, y) -> float:
    return pearson(ranks(x), ranks(y))
