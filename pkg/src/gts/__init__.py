"""Transient gradual typing with static check removal."""

from .pipeline import Compilation, compile_expr, compile_source

__all__ = ["Compilation", "compile_expr", "compile_source"]
