import numpy as np
import pytest

from datetime import date

from timerank import Claim, EvidenceSet, EvidenceSnippet


@pytest.fixture
def make_instance():
    """Factory for a claim plus evidence set from plain day offsets and vectors."""

    def build(deltas, d=3, d_m=2, domain="dom", label="yes", seed=0):
        rng = np.random.default_rng(seed)
        claim_date = date(2020, 6, 15)
        snippets = []
        for j, delta in enumerate(deltas):
            ts = None if delta is None else claim_date.fromordinal(
                claim_date.toordinal() + delta)
            snippets.append(EvidenceSnippet(
                snippet_id=f"s{j}",
                evidence_vector=rng.normal(size=d),
                search_rank=j + 1,
                timestamp=ts,
            ))
        claim = Claim("c0", domain, label, claim_date,
                      rng.normal(size=d), rng.normal(size=d_m))
        return claim, EvidenceSet(tuple(snippets))

    return build
