"""rwkvlab: a desk-scale laboratory for the RWKV linear-attention recurrence,
sentence embeddings built from its layer states, and the diagnostics that
probe both."""

__version__ = "0.1.0"
