"""
Script to look for conjunctions wider than the proven regime where the
xor o gapmaj trichotomy or the maj o gapor case analysis stops holding
"""
import sys
import os

# Add the src directory to path
script_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.dirname(script_dir))

import numpy as np

from querylab.certificates import MajVerdict, maj_case_analysis, regime_width, xor_fourier_check
from querylab.distributions import Conjunction


def random_conjunction(rng, arity, width):
    positions = rng.choice(arity, size=width, replace=False)
    signs = rng.integers(0, 2, size=width)
    return Conjunction(
        positive=frozenset(int(i) for i, s in zip(positions, signs) if s),
        negative=frozenset(int(i) for i, s in zip(positions, signs) if not s),
    )


def scan(n=16, m=12, samples=2000, seed=0):
    """Sample conjunctions at growing widths and count the misses per width"""
    rng = np.random.default_rng(seed)
    print(f"xor o gapmaj, n={n}, m={m}: regime width {regime_width(n, 14)}")
    for width in range(regime_width(n, 14) + 1, min(n * m, 4 * n) + 1, max(1, n // 4)):
        misses = 0
        for _ in range(samples):
            result = xor_fourier_check(n, m, random_conjunction(rng, n * m, width), enumerate_mixture=False)
            misses += not (result.product_bounded and result.trichotomy)
        print(f"  width {width:3d}: {misses}/{samples} miss the trichotomy")

    m_even = m + m % 2
    print(f"maj o gapor, n={n}, m={m_even}: regime width {regime_width(n, 16)}")
    for width in range(regime_width(n, 16) + 1, min(n * m_even, 4 * n) + 1, max(1, n // 4)):
        candidates = []
        for _ in range(samples):
            conj = random_conjunction(rng, n * m_even, width)
            if maj_case_analysis(n, m_even, conj, enumerate_mixture=False).verdict is MajVerdict.NONE:
                candidates.append(conj)
        print(f"  width {width:3d}: {len(candidates)}/{samples} with no branch")
        for conj in candidates[:3]:
            print(f"    - {conj}")


if __name__ == "__main__":
    args = [int(a) for a in sys.argv[1:]]
    scan(*args)
