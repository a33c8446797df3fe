"""Random inputs shared by several test modules."""

import numpy as np
from scipy.stats import unitary_group

from trhom.fock import CreationMonomial, ModeLabel, OperatorPoly

MODES4 = (ModeLabel("1", "H"), ModeLabel("1", "V"), ModeLabel("2", "H"), ModeLabel("2", "V"))


def random_poly(rng, modes=MODES4, max_photons=4, max_terms=5):
    """Random polynomial with total degree <= max_photons (every monomial)."""
    terms = {}
    for _ in range(rng.integers(1, max_terms + 1)):
        deg = int(rng.integers(0, max_photons + 1))
        picks = rng.choice(len(modes), size=deg)
        powers = {}
        for p in picks:
            powers[modes[p]] = powers.get(modes[p], 0) + 1
        coef = complex(rng.normal(), rng.normal())
        mono = CreationMonomial.of(powers)
        terms[mono] = terms.get(mono, 0) + coef
    return OperatorPoly(terms)


def random_unitary_images(rng, modes=MODES4):
    u = unitary_group.rvs(len(modes), random_state=rng)
    return u, {m: tuple((modes[j], u[j, i]) for j in range(len(modes))) for i, m in enumerate(modes)}


def poly_terms(p):
    return [(mono.powers, c) for mono, c in p]

