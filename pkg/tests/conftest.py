from __future__ import annotations

from hypothesis import settings
from hypothesis import strategies as st

from gts.types import DYN, INT, Fun, Ref

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")


def surface_types(max_leaves: int = 8) -> st.SearchStrategy:
    """Variable-free types; doubles as the full-type strategy."""
    return st.recursive(
        st.sampled_from([DYN, INT]),
        lambda inner: st.one_of(st.builds(Ref, inner), st.builds(Fun, inner, inner)),
        max_leaves=max_leaves,
    )
